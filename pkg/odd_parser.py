import logging
import math
import re
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import yaml
from yaml.nodes import MappingNode, Node, ScalarNode, SequenceNode

import config
from environments import EnvironmentCategory
from errors import DuplicateId, OddError, ParseDiagnostic, ParseError, Severity
from expressions import parse_expression
from odd_model import (ROOT_NAME, BooleanValue, DataSizeValue, DurationValue, ExpressionValue,
                       IntegerValue, IntervalValue, LeafKind, LeafType, LeafValue, OddDocument,
                       RangeConstraint, RealValue, Role, SourceLocation, Taxonomy, TaxonomyNode,
                       TextSetValue, TextValue, extend_taxonomy, join_path, validate_document)

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)

DOCUMENT_SUFFIXES = (".yaml", ".yml", ".json")

# Формы значений листа, записываемые отображением с одним ключом
INTERVAL_KEY, ANY_OF_KEY, EXPR_KEY = "interval", "any_of", "expr"
VALUE_FORMS = (INTERVAL_KEY, ANY_OF_KEY, EXPR_KEY)

LEAF_ATTRIBUTES = ("kind", "unit", "range", "required", "ordinal", "description")

DURATION_UNITS = {"ms": 0.001, "s": 1.0, "min": 60.0, "h": 3600.0, "d": 86400.0}
DATA_SIZE_UNITS = {
    "b": 1, "kb": 10 ** 3, "kib": 2 ** 10, "mb": 10 ** 6, "mib": 2 ** 20,
    "gb": 10 ** 9, "gib": 2 ** 30, "tb": 10 ** 12, "tib": 2 ** 40,
}
_QUANTITY = re.compile(r"\s*(-?\d+(?:\.\d+)?)\s*([a-z]+)\s*")


class OddLoader(yaml.SafeLoader):
    # SafeLoader с поддержкой вещественных чисел без точки (1e-05), как в JSON
    pass


OddLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?[0-9]+[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


class _Diagnostics:
    # Накопитель диагностик разбора одного файла

    def __init__(self, origin: Optional[str]):
        self.origin = origin
        self.items: List[ParseDiagnostic] = []

    def error(self, node_or_mark, message: str):
        line, column = _position(node_or_mark)
        self.items.append(ParseDiagnostic(Severity.ERROR, line, column, message))

    def extend(self, diagnostics: List[ParseDiagnostic]):
        self.items.extend(diagnostics)

    @property
    def has_errors(self) -> bool:
        return any(d.severity is Severity.ERROR for d in self.items)

    def raise_if_errors(self):
        if self.has_errors:
            raise ParseError(self.items, self.origin)


def _position(node_or_mark) -> Tuple[int, int]:
    mark = getattr(node_or_mark, "start_mark", node_or_mark)
    if mark is None:
        return 1, 1
    return mark.line + 1, mark.column + 1


def _location(node: Node) -> SourceLocation:
    return SourceLocation(*_position(node))


def _compose(source: str, diagnostics: _Diagnostics) -> Tuple[Optional[OddLoader], Optional[MappingNode]]:
    # Разбор YAML/JSON в дерево узлов с позициями
    loader = OddLoader(source)
    try:
        root = loader.get_single_node()
    except yaml.MarkedYAMLError as e:
        loader.dispose()
        diagnostics.error(e.problem_mark or e.context_mark, f"синтаксическая ошибка: {e.problem or e}")
        return None, None
    except yaml.YAMLError as e:
        loader.dispose()
        diagnostics.error(None, f"синтаксическая ошибка: {e}")
        return None, None

    if root is None:
        loader.dispose()
        diagnostics.error(None, "пустой файл")
        return None, None
    if not isinstance(root, MappingNode):
        loader.dispose()
        diagnostics.error(root, "ожидалось отображение верхнего уровня")
        return None, None
    return loader, root


def _pairs(node: MappingNode, diagnostics: _Diagnostics) -> Iterator[Tuple[str, Node, Node]]:
    # Пары (ключ, узел ключа, узел значения); повторяющиеся ключи - ошибка
    seen = set()
    for key_node, value_node in node.value:
        if not isinstance(key_node, ScalarNode):
            diagnostics.error(key_node, "ключ должен быть скаляром")
            continue
        key = key_node.value
        if key in seen:
            diagnostics.error(key_node, f"повторяющийся ключ {key!r}")
            continue
        seen.add(key)
        yield key, key_node, value_node


def _header(loader: OddLoader, root: MappingNode, diagnostics: _Diagnostics,
            allowed: Tuple[str, ...]) -> Dict[str, Tuple[Node, object]]:
    header = {}
    for key, key_node, value_node in _pairs(root, diagnostics):
        if key not in allowed:
            diagnostics.error(key_node, f"неизвестное поле {key!r}")
            continue
        if isinstance(value_node, ScalarNode):
            header[key] = (value_node, loader.construct_object(value_node))
        else:
            header[key] = (value_node, None)
    return header


def _header_text(header, key: str, diagnostics: _Diagnostics) -> Optional[str]:
    if key not in header:
        return None
    node, value = header[key]
    if not isinstance(node, ScalarNode) or value is None:
        diagnostics.error(node, f"поле {key!r} должно быть строкой")
        return None
    return node.value


# ТАКСОНОМИИ

def parse_taxonomy(source: str, registry: Optional["TaxonomyRegistry"] = None,
                   origin: Optional[str] = None) -> Taxonomy:
    # Разбор файла таксономии. Ссылка extends разрешается по уже загруженным таксономиям.
    #
    # Args:
    #     source: Текст файла (YAML)
    #     registry: Реестр ранее загруженных таксономий
    #     origin: Имя файла для диагностик
    #
    # Returns:
    #     Таксономия; при ошибках - ParseError со списком диагностик

    diagnostics = _Diagnostics(origin)
    loader, root = _compose(source, diagnostics)
    diagnostics.raise_if_errors()
    try:
        header = _header(loader, root, diagnostics, ("id", "extends", "description", "nodes"))
        taxonomy_id = _header_text(header, "id", diagnostics)
        extends = _header_text(header, "extends", diagnostics)
        if taxonomy_id is None:
            diagnostics.error(root, "не указан id таксономии")

        base = None
        if extends is not None:
            base = registry.get(extends) if registry is not None else None
            if base is None:
                diagnostics.error(header["extends"][0], f"базовая таксономия {extends!r} не загружена")

        nodes_entry = header.get("nodes")
        children: List[Tuple[TaxonomyNode, Node]] = []
        if nodes_entry is None:
            diagnostics.error(root, "отсутствует раздел nodes")
        elif not isinstance(nodes_entry[0], MappingNode):
            diagnostics.error(nodes_entry[0], "раздел nodes должен быть отображением")
        else:
            children = _parse_children(loader, nodes_entry[0], diagnostics)
        diagnostics.raise_if_errors()

        if base is None:
            try:
                taxonomy = Taxonomy(id=taxonomy_id, root=TaxonomyNode(ROOT_NAME, tuple(c for c, _ in children)))
            except ValueError as e:
                diagnostics.error(nodes_entry[0], str(e))
                diagnostics.raise_if_errors()
        else:
            taxonomy = base
            for child, node in children:
                try:
                    taxonomy = extend_taxonomy(taxonomy, [("", child)])
                except OddError as e:
                    diagnostics.error(node, str(e))
            diagnostics.raise_if_errors()
            taxonomy = Taxonomy(id=taxonomy_id, root=taxonomy.root, extends=base.id,
                                lineage=(taxonomy_id,) + base.lineage)

        logger.info(f"Загружена таксономия {taxonomy.id}: {len(taxonomy.leaves())} листьев")
        return taxonomy
    finally:
        loader.dispose()


def _parse_children(loader: OddLoader, mapping: MappingNode,
                    diagnostics: _Diagnostics) -> List[Tuple[TaxonomyNode, Node]]:
    result = []
    for name, key_node, value_node in _pairs(mapping, diagnostics):
        node = _parse_node(loader, name, key_node, value_node, diagnostics)
        if node is not None:
            result.append((node, key_node))
    return result


def _parse_node(loader: OddLoader, name: str, key_node: Node, value_node: Node,
                diagnostics: _Diagnostics) -> Optional[TaxonomyNode]:
    try:
        if isinstance(value_node, ScalarNode):
            return TaxonomyNode(name, leaf_type=LeafType(_leaf_kind(value_node, diagnostics)))
        if not isinstance(value_node, MappingNode):
            diagnostics.error(value_node, f"узел {name!r}: ожидалось отображение или вид листа")
            return None
        keys = [k.value for k, _ in value_node.value if isinstance(k, ScalarNode)]
        if "kind" in keys:
            return _parse_leaf(loader, name, value_node, diagnostics)
        children = _parse_children(loader, value_node, diagnostics)
        if not children:
            diagnostics.error(value_node, f"ветвь {name!r} не содержит узлов")
            return None
        return TaxonomyNode(name, tuple(c for c, _ in children))
    except (ValueError, TypeError, OverflowError) as e:
        diagnostics.error(key_node, str(e))
        return None


def _leaf_kind(node: Node, diagnostics: _Diagnostics) -> LeafKind:
    try:
        return LeafKind(node.value)
    except (ValueError, TypeError):
        kinds = ", ".join(k.value for k in LeafKind)
        raise ValueError(f"неизвестный вид листа {node.value!r} (допустимы: {kinds})") from None


def _parse_leaf(loader: OddLoader, name: str, mapping: MappingNode,
                diagnostics: _Diagnostics) -> TaxonomyNode:
    attrs = {}
    for key, key_node, value_node in _pairs(mapping, diagnostics):
        if key not in LEAF_ATTRIBUTES:
            diagnostics.error(key_node, f"лист {name!r}: неизвестный атрибут {key!r}")
            continue
        attrs[key] = value_node

    kind = _leaf_kind(attrs["kind"], diagnostics)
    constraint = None
    if "range" in attrs:
        bounds = _scalar_list(loader, attrs["range"])
        if len(bounds) != 2 or not all(_is_number(b) for b in bounds):
            raise ValueError(f"лист {name!r}: range должен быть парой чисел")
        constraint = RangeConstraint(float(bounds[0]), float(bounds[1]))

    def flag(key: str) -> bool:
        if key not in attrs:
            return False
        value = loader.construct_object(attrs[key])
        if not isinstance(value, bool):
            raise ValueError(f"лист {name!r}: {key} должен быть true или false")
        return value

    unit = attrs["unit"].value if "unit" in attrs else None
    description = attrs["description"].value if "description" in attrs else None
    return TaxonomyNode(name,
                        leaf_type=LeafType(kind, unit, constraint, flag("ordinal")),
                        required=flag("required"),
                        description=description)


def _scalar_list(loader: OddLoader, node: Node) -> list:
    if not isinstance(node, SequenceNode):
        return []
    return [loader.construct_object(n) for n in node.value if isinstance(n, ScalarNode)]


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


# ДОКУМЕНТЫ

def parse_document(source: str, registry: "TaxonomyRegistry", origin: Optional[str] = None,
                   default_id: Optional[str] = None, validate: bool = True) -> OddDocument:
    # Разбор документа требования или возможности.
    # Значения приводятся к виду листа таксономии; несовместимые значения сохраняются
    # как есть и отклоняются валидацией.
    #
    # Args:
    #     source: Текст файла (YAML или JSON)
    #     registry: Реестр таксономий
    #     origin: Имя файла для диагностик
    #     default_id: Идентификатор, если в файле нет поля id (обычно имя файла)
    #     validate: Превращать нарушения validate_document в ошибки разбора
    #
    # Returns:
    #     Документ; при ошибках - ParseError со списком диагностик

    diagnostics = _Diagnostics(origin)
    loader, root = _compose(source, diagnostics)
    diagnostics.raise_if_errors()
    try:
        header = _header(loader, root, diagnostics,
                         ("id", "role", "taxonomy", "name", "category", "assignments"))
        doc_id = _header_text(header, "id", diagnostics) or default_id
        if doc_id is None:
            diagnostics.error(root, "не указан id документа")

        role = None
        role_text = _header_text(header, "role", diagnostics)
        if role_text is None:
            diagnostics.error(root, "не указана роль документа (requirement или capability)")
        else:
            try:
                role = Role(role_text)
            except ValueError:
                diagnostics.error(header["role"][0], f"неизвестная роль {role_text!r}")

        taxonomy = None
        taxonomy_id = _header_text(header, "taxonomy", diagnostics)
        if taxonomy_id is None:
            diagnostics.error(root, "не указана таксономия документа")
        else:
            taxonomy = registry.get(taxonomy_id)
            if taxonomy is None:
                diagnostics.error(header["taxonomy"][0], f"таксономия {taxonomy_id!r} не загружена")

        category = _header_text(header, "category", diagnostics)
        if category is not None:
            if role is Role.REQUIREMENT:
                diagnostics.error(header["category"][0], "категория окружения допустима только у возможностей")
            elif category not in {c.value for c in EnvironmentCategory}:
                diagnostics.error(header["category"][0], f"неизвестная категория окружения {category!r}")

        assignments: Dict[str, LeafValue] = {}
        locations: Dict[str, SourceLocation] = {}
        if "assignments" in header and taxonomy is not None:
            node = header["assignments"][0]
            if isinstance(node, MappingNode):
                _walk_assignments(loader, node, "", taxonomy, assignments, locations, diagnostics)
            elif not (isinstance(node, ScalarNode) and header["assignments"][1] is None):
                diagnostics.error(node, "раздел assignments должен быть отображением")
        diagnostics.raise_if_errors()

        document = OddDocument(id=doc_id, role=role, taxonomy=taxonomy, assignments=assignments,
                               name=_header_text(header, "name", diagnostics), category=category,
                               locations=locations)
        if validate:
            for violation in validate_document(document, taxonomy):
                where = locations.get(violation.path) or _location(root)
                diagnostics.items.append(ParseDiagnostic(Severity.ERROR, where.line, where.column,
                                                         f"{violation.path}: {violation.message}"))
            diagnostics.raise_if_errors()

        logger.debug(f"Разобран документ {document.id} ({role.value}), назначений: {len(assignments)}")
        return document
    finally:
        loader.dispose()


def _walk_assignments(loader: OddLoader, mapping: MappingNode, prefix: str, taxonomy: Taxonomy,
                      assignments: Dict[str, LeafValue], locations: Dict[str, SourceLocation],
                      diagnostics: _Diagnostics):
    for key, key_node, value_node in _pairs(mapping, diagnostics):
        path = join_path(prefix, key)
        tax_node = taxonomy.node(path)
        descend = isinstance(value_node, MappingNode) and not _is_value_form(value_node)
        if descend and (tax_node is None or not tax_node.is_leaf):
            _walk_assignments(loader, value_node, path, taxonomy, assignments, locations, diagnostics)
            continue
        if path in assignments:
            diagnostics.error(key_node, f"путь {path} назначен повторно")
            continue
        leaf_type = tax_node.leaf_type if tax_node is not None and tax_node.is_leaf else None
        value = _convert_value(loader, value_node, leaf_type, diagnostics)
        if value is not None:
            assignments[path] = value
            locations[path] = _location(value_node)


def _is_value_form(node: MappingNode) -> bool:
    return (len(node.value) == 1 and isinstance(node.value[0][0], ScalarNode)
            and node.value[0][0].value in VALUE_FORMS)


def _convert_value(loader: OddLoader, node: Node, leaf_type: Optional[LeafType],
                   diagnostics: _Diagnostics) -> Optional[LeafValue]:
    if isinstance(node, MappingNode):
        if not _is_value_form(node):
            diagnostics.error(node, f"ожидалась форма значения: {', '.join(VALUE_FORMS)}")
            return None
        key_node, inner = node.value[0]
        if key_node.value == INTERVAL_KEY:
            return _convert_interval(loader, inner, diagnostics)
        if key_node.value == ANY_OF_KEY:
            return _convert_text_set(inner, diagnostics)
        return _convert_expression(inner, diagnostics)

    if isinstance(node, SequenceNode):
        return _convert_text_set(node, diagnostics)

    # Скаляры текстовых листьев берутся дословно: "no" остаётся текстом
    if leaf_type is not None and leaf_type.kind is LeafKind.TEXT:
        return TextValue(node.value)
    if leaf_type is not None and leaf_type.kind is LeafKind.TEXT_SET:
        return TextSetValue(frozenset({node.value}))

    raw = loader.construct_object(node)
    if raw is None:
        diagnostics.error(node, "пустое значение")
        return None
    if isinstance(raw, float) and not math.isfinite(raw):
        diagnostics.error(node, "значение должно быть конечным числом")
        return None

    kind = leaf_type.kind if leaf_type is not None else None
    try:
        return _convert_number(raw, kind)
    except (OverflowError, ValueError):
        diagnostics.error(node, f"число {node.value} вне диапазона допустимых значений")
        return None


def _convert_number(raw, kind: Optional[LeafKind]) -> LeafValue:
    is_int = isinstance(raw, int) and not isinstance(raw, bool)
    is_number = is_int or isinstance(raw, float)

    if kind is LeafKind.REAL and is_number:
        return RealValue(float(raw))
    if kind is LeafKind.DURATION:
        seconds = float(raw) if is_number else _quantity(raw, DURATION_UNITS)
        if seconds is not None:
            return DurationValue(seconds)
    if kind is LeafKind.DATA_SIZE:
        size = raw if is_int else _quantity(raw, DATA_SIZE_UNITS)
        if size is not None and float(size).is_integer():
            return DataSizeValue(int(size))
    return _infer_value(raw)


def _quantity(raw, units: Dict[str, float]) -> Optional[float]:
    if not isinstance(raw, str):
        return None
    match = _QUANTITY.fullmatch(raw.lower())
    if match is None or match.group(2) not in units:
        return None
    return float(match.group(1)) * units[match.group(2)]


def _infer_value(raw) -> LeafValue:
    # Вид значения по самому скаляру (для несовпадающих или неизвестных листьев)
    if isinstance(raw, bool):
        return BooleanValue(raw)
    if isinstance(raw, int):
        return IntegerValue(raw)
    if isinstance(raw, float):
        return RealValue(raw)
    return TextValue(str(raw))


def _convert_interval(loader: OddLoader, node: Node, diagnostics: _Diagnostics) -> Optional[LeafValue]:
    bounds = _scalar_list(loader, node)
    if len(bounds) != 2 or not all(_is_number(b) for b in bounds):
        diagnostics.error(node, "interval должен быть парой чисел [нижняя, верхняя]")
        return None
    try:
        return IntervalValue(float(bounds[0]), float(bounds[1]))
    except (OverflowError, ValueError) as e:
        diagnostics.error(node, str(e))
        return None


def _convert_text_set(node: Node, diagnostics: _Diagnostics) -> Optional[LeafValue]:
    if not isinstance(node, SequenceNode) or not all(isinstance(n, ScalarNode) for n in node.value):
        diagnostics.error(node, "any_of должен быть списком строк")
        return None
    return TextSetValue(frozenset(n.value for n in node.value))


def _convert_expression(node: Node, diagnostics: _Diagnostics) -> Optional[LeafValue]:
    if not isinstance(node, ScalarNode):
        diagnostics.error(node, "expr должен быть строкой")
        return None
    line, column = _position(node)
    quoted = node.style in ("'", '"')
    try:
        expr = parse_expression(node.value, line_offset=line - 1,
                                column_offset=column if quoted else column - 1)
    except ParseError as e:
        diagnostics.extend(e.diagnostics)
        return None
    return ExpressionValue(expr, node.value)


# РЕЕСТР ТАКСОНОМИЙ

class TaxonomyRegistry:
    # Реестр загруженных таксономий по идентификатору.
    # Расширения разрешаются только по уже зарегистрированным таксономиям.

    def __init__(self):
        self._taxonomies: Dict[str, Taxonomy] = {}

    def register(self, taxonomy: Taxonomy):
        existing = self._taxonomies.get(taxonomy.id)
        if existing is not None and existing != taxonomy:
            raise DuplicateId(f"таксономия {taxonomy.id!r} уже загружена")
        self._taxonomies[taxonomy.id] = taxonomy

    def get(self, taxonomy_id: str) -> Optional[Taxonomy]:
        return self._taxonomies.get(taxonomy_id)

    def __contains__(self, taxonomy_id: str) -> bool:
        return taxonomy_id in self._taxonomies

    def ids(self) -> List[str]:
        return sorted(self._taxonomies)

    def load_file(self, path: Path) -> Taxonomy:
        path = Path(path)
        taxonomy = parse_taxonomy(path.read_text(encoding="utf-8"), self, origin=str(path))
        self.register(taxonomy)
        return taxonomy

    def load_directory(self, directory: Path) -> List[Taxonomy]:
        # Загрузка всех файлов каталога. Порядок определяется ссылками extends:
        # файл загружается, когда его базовая таксономия уже в реестре.

        pending = {p: _peek_extends(p) for p in sorted(Path(directory).glob("*.y*ml"))}
        loaded = []
        while pending:
            ready = [p for p, base in pending.items() if base is None or base in self]
            if not ready:
                # Оставшиеся файлы ссылаются на отсутствующие базы: разбор выдаст диагностику
                ready = list(pending)
            for path in ready:
                del pending[path]
                loaded.append(self.load_file(path))
        return loaded

    @classmethod
    def shipped(cls) -> "TaxonomyRegistry":
        # Реестр с поставляемыми таксономиями и каталогом из ODD_TAXONOMY_DIR
        registry = cls()
        registry.load_directory(config.SHIPPED_TAXONOMY_DIR)
        if config.TAXONOMY_DIR:
            registry.load_directory(Path(config.TAXONOMY_DIR))
        return registry


def _peek_extends(path: Path) -> Optional[str]:
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (yaml.YAMLError, OSError):
        return None
    if isinstance(data, dict) and isinstance(data.get("extends"), str):
        return data["extends"]
    return None


def load_document(path: Path, registry: TaxonomyRegistry, validate: bool = True) -> OddDocument:
    # Загрузка документа из файла; id по умолчанию - имя файла без расширения
    path = Path(path)
    return parse_document(path.read_text(encoding="utf-8"), registry, origin=str(path),
                          default_id=path.stem, validate=validate)


def list_document_files(directory: Path) -> List[Path]:
    return sorted(p for p in Path(directory).iterdir()
                  if p.is_file() and p.suffix.lower() in DOCUMENT_SUFFIXES)
