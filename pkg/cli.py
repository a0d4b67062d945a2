import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import config
from allocation_service import Environment, allocate
from analytics import Analytics
from containment import generic_compare
from environments import profile_warnings
from errors import OddError, ParseError
from evaluator import concretize_capability
from exporter import FORMATS, DataExporter, to_canonical_text, to_plantuml
from odd_model import OddDocument, Role, SourceLocation, validate_document
from odd_parser import TaxonomyRegistry, list_document_files, load_document

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)

# Коды завершения: успех / отрицательный результат проверки / ошибка работы
EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2


def _setup_logging(verbose: bool):
    # Приглушаем сторонние библиотеки
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)

    logging.basicConfig(
        level=logging.DEBUG if verbose else config.LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def _error(message: str):
    print(message, file=sys.stderr)


def _print_parse_error(error: ParseError, fallback: str = ""):
    origin = error.origin or fallback
    for diagnostic in error.diagnostics:
        _error(f"{origin}:{diagnostic}")


def _write(text: str, out: Optional[str]):
    # Отчёт в файл или в стандартный вывод
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _registry(args) -> TaxonomyRegistry:
    registry = TaxonomyRegistry.shipped()
    for path in args.taxonomy or []:
        registry.load_file(Path(path))
    return registry


def _load_as(path: Path, registry: TaxonomyRegistry, role: Role) -> OddDocument:
    # Документ в заданной роли: документ без выражений может сравниваться с собой
    doc = load_document(path, registry)
    if doc.role is role:
        return doc
    if role is Role.REQUIREMENT and not doc.is_concrete:
        raise OddError(f"{path}: документ с выражениями не может быть требованием")
    logger.info(f"{doc.id}: используется в роли {role.value}")
    return doc.with_role(role)


# КОМАНДЫ

def cmd_validate(args) -> int:
    # Проверка документов по таксономиям; нарушения - в стандартный поток ошибок
    registry = _registry(args)
    failed = False

    for name in args.documents:
        path = Path(name)
        try:
            doc = load_document(path, registry, validate=False)
        except ParseError as e:
            _print_parse_error(e, name)
            failed = True
            continue

        violations = validate_document(doc, doc.taxonomy)
        for violation in violations:
            where = doc.locations.get(violation.path) or SourceLocation(1, 1)
            _error(f"{path}:{where}: error: {violation.path}: {violation.message} [{violation.code.value}]")
        if doc.role is Role.CAPABILITY:
            for warning in profile_warnings(doc):
                _error(f"{path}: warning: {warning}")

        if violations:
            failed = True
        else:
            logger.info(f"✅ {path}: документ {doc.id} корректен")

    return EXIT_NEGATIVE if failed else EXIT_OK


def cmd_compare(args) -> int:
    registry = _registry(args)
    cap = _load_as(Path(args.cap), registry, Role.CAPABILITY)
    req = _load_as(Path(args.req), registry, Role.REQUIREMENT)

    verdict = generic_compare(cap, req)
    _write(to_canonical_text(verdict, args.format), args.report)
    if args.concretized:
        _write(to_canonical_text(concretize_capability(cap, req), args.format), args.concretized)

    for leaf in verdict.failures:
        _error(f"✘ {leaf.path}: {leaf.message} [{leaf.rule.value}]")
    return EXIT_OK if verdict.within else EXIT_NEGATIVE


def cmd_allocate(args) -> int:
    req_dir, cap_dir = Path(args.req_dir), Path(args.cap_dir)
    for directory in (req_dir, cap_dir):
        if not directory.is_dir():
            _error(f"{directory}: каталог не найден")
            return EXIT_ERROR

    registry = _registry(args)
    test_cases = [_load_as(p, registry, Role.REQUIREMENT) for p in list_document_files(req_dir)]
    envs = [Environment.from_document(_load_as(p, registry, Role.CAPABILITY))
            for p in list_document_files(cap_dir)]
    for env in envs:
        for warning in profile_warnings(env.capability):
            _error(f"{env.id}: warning: {warning}")

    report = allocate(test_cases, envs, workers=args.workers)
    _write(to_canonical_text(report, args.format), args.report)

    if args.excel:
        Path(args.excel).write_bytes(DataExporter.export_to_excel(report).getvalue())
    if args.heatmap:
        image = Analytics.generate_heatmap(report)
        if image is None:
            logger.warning("⚠️ Матрица пуста, тепловая карта не создана")
        else:
            Path(args.heatmap).write_bytes(image.getvalue())

    for case in report.unallocated:
        _error(f"✘ {case.test_case_id}: нет подходящего окружения")
    return EXIT_NEGATIVE if report.unallocated else EXIT_OK


def cmd_viz(args) -> int:
    registry = _registry(args)
    doc = load_document(Path(args.doc), registry)
    _write(to_plantuml(doc), args.out)
    return EXIT_OK


def cmd_export(args) -> int:
    registry = _registry(args)
    if args.doc:
        obj = load_document(Path(args.doc), registry)
    else:
        obj = registry.get(args.taxonomy_id)
        if obj is None:
            _error(f"таксономия {args.taxonomy_id!r} не загружена (доступны: {', '.join(registry.ids())})")
            return EXIT_ERROR
    _write(to_canonical_text(obj, args.format), args.out)
    return EXIT_OK


# РАЗБОР АРГУМЕНТОВ

def _add_common_args(parser: argparse.ArgumentParser, with_format: bool = True):
    parser.add_argument("--taxonomy", action="append", metavar="FILE",
                        help="Дополнительный файл таксономии (можно указать несколько раз)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Подробный журнал")
    if with_format:
        parser.add_argument("--format", choices=FORMATS, default=config.REPORT_FORMAT,
                            help="Формат отчёта")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odd",
        description="Описание ODD, сравнение требований тест-кейсов с возможностями окружений "
                    "и распределение тест-кейсов",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    validate = subparsers.add_parser("validate", help="Проверить документы по таксономиям")
    validate.add_argument("documents", nargs="+", metavar="FILE", help="Документы требований и возможностей")
    _add_common_args(validate, with_format=False)
    validate.set_defaults(handler=cmd_validate)

    compare = subparsers.add_parser("compare", help="Сравнить требование с возможностью окружения")
    compare.add_argument("--cap", required=True, metavar="FILE", help="Документ-возможность")
    compare.add_argument("--req", required=True, metavar="FILE", help="Документ-требование")
    compare.add_argument("--report", metavar="FILE", help="Файл отчёта (по умолчанию stdout)")
    compare.add_argument("--concretized", metavar="FILE", help="Записать конкретизированную возможность")
    _add_common_args(compare)
    compare.set_defaults(handler=cmd_compare)

    alloc = subparsers.add_parser("allocate", help="Распределить тест-кейсы по окружениям")
    alloc.add_argument("--req-dir", required=True, metavar="DIR", help="Каталог требований тест-кейсов")
    alloc.add_argument("--cap-dir", required=True, metavar="DIR", help="Каталог возможностей окружений")
    alloc.add_argument("--report", required=True, metavar="FILE", help="Файл отчёта")
    alloc.add_argument("--excel", metavar="FILE", help="Excel-книга с матрицей и ранжированием")
    alloc.add_argument("--heatmap", metavar="FILE", help="PNG тепловая карта запаса")
    alloc.add_argument("--workers", type=int, default=None, help="Число потоков сравнения")
    _add_common_args(alloc)
    alloc.set_defaults(handler=cmd_allocate)

    viz = subparsers.add_parser("viz", help="Диаграмма PlantUML документа")
    viz.add_argument("--doc", required=True, metavar="FILE", help="Документ")
    viz.add_argument("--out", required=True, metavar="FILE", help="Файл .puml")
    _add_common_args(viz, with_format=False)
    viz.set_defaults(handler=cmd_viz)

    export = subparsers.add_parser("export", help="Каноническое представление документа или таксономии")
    source = export.add_mutually_exclusive_group(required=True)
    source.add_argument("--doc", metavar="FILE", help="Документ")
    source.add_argument("--taxonomy-id", metavar="ID", help="Идентификатор загруженной таксономии")
    export.add_argument("--out", metavar="FILE", help="Файл результата (по умолчанию stdout)")
    _add_common_args(export)
    export.set_defaults(handler=cmd_export)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        code = e.code
        return code if isinstance(code, int) else (EXIT_OK if code is None else EXIT_ERROR)

    _setup_logging(args.verbose)

    try:
        return args.handler(args)
    except ParseError as e:
        _print_parse_error(e)
        return EXIT_ERROR
    except OddError as e:
        logger.error(f"❌ {e}")
        _error(f"error: {e}")
        return EXIT_ERROR
    except OSError as e:
        logger.error(f"❌ Ошибка ввода-вывода: {e}")
        _error(f"error: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
