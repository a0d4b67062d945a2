import json
import logging
import traceback
from io import BytesIO
from typing import Any, Dict, List, Union

import pandas as pd
import yaml

from allocation_service import AllocationReport
from containment import ComparisonVerdict, LeafVerdict
from odd_model import (BooleanValue, DataSizeValue, DurationValue, ExpressionValue, IntegerValue,
                       IntervalValue, LeafValue, OddDocument, RealValue, Taxonomy, TaxonomyNode,
                       TextSetValue, TextValue, split_path)

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)

FORMATS = ("yaml", "json")

Exportable = Union[Taxonomy, OddDocument, ComparisonVerdict, AllocationReport]


class CanonicalDumper(yaml.SafeDumper):
    # Без якорей и ссылок: одинаковые данные всегда дают одинаковый текст
    def ignore_aliases(self, data):
        return True


# КАНОНИЧЕСКИЕ ДАННЫЕ

def value_data(value: LeafValue) -> Any:
    if isinstance(value, (BooleanValue, TextValue, IntegerValue)):
        return value.value
    if isinstance(value, RealValue):
        return value.value
    if isinstance(value, DurationValue):
        return value.seconds
    if isinstance(value, DataSizeValue):
        return value.size_bytes
    if isinstance(value, TextSetValue):
        return {"any_of": sorted(value.values)}
    if isinstance(value, IntervalValue):
        return {"interval": [value.lower, value.upper]}
    if isinstance(value, ExpressionValue):
        return {"expr": value.source}
    raise TypeError(f"неизвестный вид значения: {type(value).__name__}")


def _nest(flat: Dict[str, Any]) -> Dict[str, Any]:
    # {"a/b": 1} -> {"a": {"b": 1}}
    tree: Dict[str, Any] = {}
    for path in sorted(flat):
        parts = split_path(path)
        node = tree
        for name in parts[:-1]:
            node = node.setdefault(name, {})
        node[parts[-1]] = flat[path]
    return tree


def _document_data(doc: OddDocument) -> Dict[str, Any]:
    data = {
        "id": doc.id,
        "role": doc.role.value,
        "taxonomy": doc.taxonomy_id,
        "assignments": _nest({p: value_data(v) for p, v in doc.assignments.items()}),
    }
    if doc.name is not None:
        data["name"] = doc.name
    if doc.category is not None:
        data["category"] = doc.category
    return data


def _node_data(node: TaxonomyNode) -> Dict[str, Any]:
    if not node.is_leaf:
        return {c.name: _node_data(c) for c in node.children}
    leaf = node.leaf_type
    data: Dict[str, Any] = {"kind": leaf.kind.value}
    if leaf.unit is not None:
        data["unit"] = leaf.unit
    if leaf.constraint is not None:
        data["range"] = [leaf.constraint.lower, leaf.constraint.upper]
    if node.required:
        data["required"] = True
    if leaf.ordinal:
        data["ordinal"] = True
    if node.description:
        data["description"] = node.description
    return data


def _taxonomy_data(tax: Taxonomy) -> Dict[str, Any]:
    return {
        "id": tax.id,
        "extends": tax.extends,
        "lineage": list(tax.lineage),
        "nodes": _node_data(tax.root),
    }


def _leaf_verdict_data(leaf: LeafVerdict) -> Dict[str, Any]:
    return {
        "path": leaf.path,
        "rule": leaf.rule.value,
        "pass": leaf.passed,
        "requirement": value_data(leaf.requirement),
        "capability": None if leaf.capability is None else value_data(leaf.capability),
        "message": leaf.message,
    }


def _verdict_data(verdict: ComparisonVerdict) -> Dict[str, Any]:
    return {
        "capability": verdict.capability_id,
        "requirement": verdict.requirement_id,
        "within": verdict.within,
        "leaves": [_leaf_verdict_data(leaf) for leaf in verdict.leaf_verdicts],
        "trace": [{"path": t.path, "expression": t.expression, "value": value_data(t.value)}
                  for t in verdict.trace],
    }


def _report_data(report: AllocationReport) -> Dict[str, Any]:
    matrix: Dict[str, Dict[str, Any]] = {}
    for (case_id, env_id), verdict in report.matrix.items():
        matrix.setdefault(case_id, {})[env_id] = _verdict_data(verdict)
    return {
        "test_cases": list(report.test_case_ids),
        "environments": [{"id": e.id, "name": e.name,
                          "category": e.category.value if e.category else None}
                         for e in report.environments],
        "feasible": {case_id: list(envs) for case_id, envs in report.feasible.items()},
        "slack": {case_id: {env_id: report.slack(case_id, env_id) for env_id in envs}
                  for case_id, envs in report.feasible.items()},
        "unallocated": [{"test_case": u.test_case_id, "failures": u.failures} for u in report.unallocated],
        "matrix": matrix,
    }


def to_canonical_data(obj: Exportable) -> Dict[str, Any]:
    # Общая структура данных для YAML и JSON
    if isinstance(obj, OddDocument):
        return _document_data(obj)
    if isinstance(obj, Taxonomy):
        return _taxonomy_data(obj)
    if isinstance(obj, ComparisonVerdict):
        return _verdict_data(obj)
    if isinstance(obj, AllocationReport):
        return _report_data(obj)
    raise TypeError(f"экспорт не поддерживается для {type(obj).__name__}")


def to_canonical_text(obj: Exportable, fmt: str = "yaml") -> str:
    # Каноническое представление: ключи отсортированы, вещественные числа
    # в кратчайшей записи, результат не зависит от запуска.
    #
    # Args:
    #     obj: Таксономия, документ, вердикт или отчёт о распределении
    #     fmt: "yaml" или "json"
    #
    # Returns:
    #     Текст, заканчивающийся переводом строки

    data = to_canonical_data(obj)
    if fmt == "json":
        return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if fmt == "yaml":
        return yaml.dump(data, Dumper=CanonicalDumper, sort_keys=True, allow_unicode=True,
                         default_flow_style=False, width=100)
    raise ValueError(f"неизвестный формат {fmt!r}, допустимы: {', '.join(FORMATS)}")


# PLANTUML

def _label(path: str, value: LeafValue) -> str:
    name = split_path(path)[-1]
    return f"{name} = {value.render()}"


def _node(node_id: str, label: str) -> str:
    # Однострочный узел: двойные кавычки внутри подписи заменяются одинарными
    text = label.replace('"', "'").replace("\n", " ")
    return f'rectangle "{text}" as {node_id}'


def to_plantuml(doc: OddDocument) -> str:
    # Дерево документа для ревью: ветви таксономии и назначенные листья.
    # Узлы - прямоугольники, рёбра повторяют структуру таксономии.

    declared = [p for p in doc.taxonomy.leaf_paths() if p in doc.assignments]
    paths = declared + sorted(p for p in doc.assignments if p not in set(declared))

    lines = ["@startuml", f"' {doc.role.value} {doc.id} ({doc.taxonomy_id})"]
    ids: Dict[str, str] = {"": "n0"}
    lines.append(_node("n0", doc.id))
    edges: List[str] = []

    for path in paths:
        parts = split_path(path)
        for depth in range(1, len(parts) + 1):
            prefix = "/".join(parts[:depth])
            if prefix in ids:
                continue
            node_id = f"n{len(ids)}"
            ids[prefix] = node_id
            if depth == len(parts):
                lines.append(_node(node_id, _label(path, doc.assignments[path])))
            else:
                lines.append(_node(node_id, parts[depth - 1]))
            edges.append(f"{ids['/'.join(parts[:depth - 1])]} --> {node_id}")

    lines += edges
    lines.append("@enduml")
    return "\n".join(lines) + "\n"


# EXCEL

class DataExporter:
    # Класс для экспорта отчёта о распределении в форматы для ревью.

    @staticmethod
    def export_to_excel(report: AllocationReport) -> BytesIO:
        # Экспорт отчёта о распределении в Excel файл.
        # Листы: "Матрица" (допустимость пар), "Ранжирование" и "Несоответствия".
        #
        # Args:
        #     report: Отчёт о распределении
        #
        # Returns:
        #     BytesIO: Буфер с Excel файлом

        output = BytesIO()

        try:
            with pd.ExcelWriter(output, engine='xlsxwriter') as writer:
                # Пустой отчёт - один лист с сообщением
                if not report.matrix:
                    pd.DataFrame({'Сообщение': ['Нет данных']}).to_excel(writer, sheet_name='Данные', index=False)
                else:
                    matrix = pd.DataFrame(
                        [['✔' if report.matrix[(t, e)].within else '✘' for e in report.environment_ids]
                         for t in report.test_case_ids],
                        index=report.test_case_ids, columns=report.environment_ids,
                    )
                    matrix.to_excel(writer, sheet_name='Матрица', index_label='Тест-кейс')

                    ranking = [
                        {'Тест-кейс': t, 'Ранг': rank, 'Окружение': e, 'Запас': report.slack(t, e)}
                        for t, envs in report.feasible.items()
                        for rank, e in enumerate(envs, start=1)
                    ]
                    pd.DataFrame(ranking, columns=['Тест-кейс', 'Ранг', 'Окружение', 'Запас']).to_excel(
                        writer, sheet_name='Ранжирование', index=False
                    )

                    failures = [
                        {
                            'Тест-кейс': t,
                            'Окружение': e,
                            'Путь': leaf.path,
                            'Правило': leaf.rule.value,
                            'Требование': leaf.requirement.render(),
                            'Возможность': leaf.capability.render() if leaf.capability else '',
                        }
                        for (t, e), verdict in report.matrix.items()
                        for leaf in verdict.failures
                    ]
                    pd.DataFrame(failures, columns=['Тест-кейс', 'Окружение', 'Путь', 'Правило',
                                                    'Требование', 'Возможность']).to_excel(
                        writer, sheet_name='Несоответствия', index=False
                    )

                    # Ширина колонок для читаемости
                    for sheet in writer.sheets.values():
                        sheet.set_column(0, 6, 22)

            output.seek(0)
            logger.info(f"✅ Excel отчёт создан: {len(report.matrix)} пар")
            return output

        except Exception as e:
            logger.error(f"❌ Ошибка создания Excel: {e}")
            logger.error(traceback.format_exc())
            raise
