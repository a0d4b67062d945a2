import json
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from errors import PathCollision, UnknownParent, UnknownPath

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)

# Имена узлов: строчные латинские буквы, цифры и подчёркивание
NAME_PATTERN = re.compile(r"[a-z][a-z0-9_]*")
PATH_SEPARATOR = "/"

# Ключ "kind" зарезервирован форматом файла таксономии под описание листа
RESERVED_NAMES = frozenset({"kind"})


def split_path(path: str) -> Tuple[str, ...]:
    # Разбивает путь "a/b/c" на компоненты; пустой путь - корень
    if not path:
        return ()
    return tuple(path.split(PATH_SEPARATOR))


def join_path(*parts: str) -> str:
    return PATH_SEPARATOR.join(p for p in parts if p)


def is_valid_path(path: str) -> bool:
    parts = split_path(path)
    return bool(parts) and all(NAME_PATTERN.fullmatch(p) for p in parts)


# ТИПЫ ЛИСТЬЕВ

class LeafKind(Enum):
    # Перечисление видов листьев таксономии

    BOOLEAN = "boolean"
    TEXT = "text"
    INTEGER = "integer"
    REAL = "real"
    DURATION = "duration"  # хранится в секундах (вещественное)
    DATA_SIZE = "data-size"  # хранится в байтах (целое)
    TEXT_SET = "text-set"

    @property
    def is_numeric(self) -> bool:
        return self in NUMERIC_KINDS


NUMERIC_KINDS = frozenset({LeafKind.INTEGER, LeafKind.REAL, LeafKind.DURATION, LeafKind.DATA_SIZE})


class Level(IntEnum):
    # Порядковые уровни тестовых атрибутов: высокий уровень включает свойства низших

    LOW = 1
    MEDIUM = 2
    HIGH = 3


@dataclass(frozen=True)
class RangeConstraint:
    # Числовое ограничение листа, обе границы включительно

    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("границы диапазона должны быть конечными")
        if self.lower > self.upper:
            raise ValueError(f"некорректный диапазон: {self.lower} > {self.upper}")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class LeafType:
    kind: LeafKind
    unit: Optional[str] = None
    constraint: Optional[RangeConstraint] = None
    ordinal: bool = False  # порядковый атрибут (сравнение ordinal-leq)


# УЗЛЫ И ТАКСОНОМИЯ

@dataclass(frozen=True)
class TaxonomyNode:
    # Узел дерева таксономии: ветвь (есть дети) или лист (есть leaf_type).
    # Имя уникально среди соседей, путь от корня однозначно задаёт узел.

    name: str
    children: Tuple["TaxonomyNode", ...] = ()
    leaf_type: Optional[LeafType] = None
    required: bool = False
    description: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not NAME_PATTERN.fullmatch(self.name) or self.name in RESERVED_NAMES:
            raise ValueError(f"недопустимое имя узла: {self.name!r}")
        if self.leaf_type is None and not self.children:
            raise ValueError(f"ветвь {self.name!r} должна содержать хотя бы один дочерний узел")
        if self.leaf_type is not None and self.children:
            raise ValueError(f"лист {self.name!r} не может иметь дочерних узлов")
        names = [c.name for c in self.children]
        if len(names) != len(set(names)):
            duplicates = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"повторяющиеся имена в {self.name!r}: {', '.join(duplicates)}")

    @property
    def is_leaf(self) -> bool:
        return self.leaf_type is not None

    @property
    def kind(self) -> str:
        return "leaf" if self.is_leaf else "branch"

    def child(self, name: str) -> Optional["TaxonomyNode"]:
        for c in self.children:
            if c.name == name:
                return c
        return None


ROOT_NAME = "odd"


@dataclass(frozen=True)
class Taxonomy:
    # Типизированная схема ODD. lineage - цепочка идентификаторов:
    # сама таксономия, затем все базовые, от ближайшей к корневой.

    id: str
    root: TaxonomyNode
    extends: Optional[str] = None
    lineage: Tuple[str, ...] = ()
    _index: Dict[str, TaxonomyNode] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lineage:
            lineage = (self.id,) if self.extends is None else (self.id, self.extends)
            object.__setattr__(self, "lineage", lineage)
        index: Dict[str, TaxonomyNode] = {}
        for path, node in _walk(self.root, ""):
            index[path] = node
        object.__setattr__(self, "_index", index)

    def node(self, path: str) -> Optional[TaxonomyNode]:
        return self._index.get(path)

    def leaf_type(self, path: str) -> LeafType:
        node = self._index.get(path)
        if node is None or not node.is_leaf:
            raise UnknownPath(f"лист отсутствует в таксономии {self.id}", path)
        return node.leaf_type

    def leaves(self) -> List[Tuple[str, TaxonomyNode]]:
        # Листья в порядке обхода в глубину по порядку объявления
        return [(p, n) for p, n in self._index.items() if n.is_leaf]

    def leaf_paths(self) -> List[str]:
        return [p for p, _ in self.leaves()]

    def is_compatible(self, other: "Taxonomy") -> bool:
        # Совместимы, если одна таксономия является расширением другой
        return self.id in other.lineage or other.id in self.lineage


def _walk(node: TaxonomyNode, prefix: str) -> Iterator[Tuple[str, TaxonomyNode]]:
    for child in node.children:
        path = join_path(prefix, child.name)
        yield path, child
        if not child.is_leaf:
            yield from _walk(child, path)


def extend_taxonomy(base: Taxonomy,
                    additions: Sequence[Tuple[str, TaxonomyNode]],
                    new_id: Optional[str] = None) -> Taxonomy:
    # Расширение таксономии новыми узлами. Базовая таксономия не изменяется.
    # Существующие ветви с тем же именем объединяются, любое другое совпадение
    # пути (в том числе лист того же типа) - PathCollision.
    #
    # Args:
    #     base: Базовая таксономия
    #     additions: Пары (путь родителя, добавляемый узел); "" - корень
    #     new_id: Идентификатор расширения (по умолчанию id базы)
    #
    # Returns:
    #     Новая таксономия, содержащая все узлы базы и добавления

    root = base.root
    for parent_path, addition in additions:
        parent = root if not parent_path else _find(root, split_path(parent_path))
        if parent is None:
            raise UnknownParent("родительский путь отсутствует", parent_path)
        if parent.is_leaf:
            raise PathCollision("родительский путь является листом", parent_path)
        root = _insert(root, split_path(parent_path), addition, parent_path)

    if new_id is None:
        return Taxonomy(id=base.id, root=root, extends=base.extends, lineage=base.lineage)
    logger.debug(f"Таксономия {new_id} расширяет {base.id}")
    return Taxonomy(id=new_id, root=root, extends=base.id, lineage=(new_id,) + base.lineage)


def _find(node: TaxonomyNode, parts: Tuple[str, ...]) -> Optional[TaxonomyNode]:
    for name in parts:
        if node.is_leaf:
            return None
        node = node.child(name)
        if node is None:
            return None
    return node


def _insert(node: TaxonomyNode, parts: Tuple[str, ...], addition: TaxonomyNode, prefix: str) -> TaxonomyNode:
    if parts:
        head = parts[0]
        children = tuple(
            _insert(c, parts[1:], addition, prefix) if c.name == head else c
            for c in node.children
        )
        return TaxonomyNode(node.name, children, node.leaf_type, node.required, node.description)

    existing = node.child(addition.name)
    if existing is None:
        return TaxonomyNode(node.name, node.children + (addition,), node.leaf_type,
                            node.required, node.description)

    path = join_path(prefix, addition.name)
    if existing.is_leaf or addition.is_leaf:
        raise PathCollision(f"узел уже существует ({existing.kind})", path)

    # Обе ветви: переносим дочерние узлы добавления внутрь существующей ветви
    merged = existing
    for grandchild in addition.children:
        merged = _insert(merged, (), grandchild, path)
    children = tuple(merged if c.name == addition.name else c for c in node.children)
    return TaxonomyNode(node.name, children, node.leaf_type, node.required, node.description)


# ЗНАЧЕНИЯ ЛИСТЬЕВ

def _format_real(value: float) -> str:
    # Кратчайшее представление, однозначно восстанавливающее число
    return repr(float(value))


class LeafValue:
    # Базовый класс значений листьев документа
    variant = "value"

    def render(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class BooleanValue(LeafValue):
    value: bool
    variant = "boolean"

    def render(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class TextValue(LeafValue):
    value: str
    variant = "text"

    def render(self) -> str:
        return json.dumps(self.value, ensure_ascii=False)


@dataclass(frozen=True)
class IntegerValue(LeafValue):
    value: int
    variant = "integer"

    def render(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class RealValue(LeafValue):
    value: float
    variant = "real"

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("вещественное значение должно быть конечным")
        object.__setattr__(self, "value", float(self.value))

    def render(self) -> str:
        return _format_real(self.value)


@dataclass(frozen=True)
class DurationValue(LeafValue):
    seconds: float
    variant = "duration"

    def __post_init__(self):
        if not math.isfinite(self.seconds):
            raise ValueError("длительность должна быть конечной")
        object.__setattr__(self, "seconds", float(self.seconds))

    def render(self) -> str:
        return f"{_format_real(self.seconds)}s"


@dataclass(frozen=True)
class DataSizeValue(LeafValue):
    size_bytes: int
    variant = "data-size"

    def render(self) -> str:
        return f"{self.size_bytes}b"


@dataclass(frozen=True)
class TextSetValue(LeafValue):
    values: frozenset
    variant = "text-set"

    def __post_init__(self):
        object.__setattr__(self, "values", frozenset(self.values))

    def render(self) -> str:
        return "{" + ", ".join(json.dumps(v, ensure_ascii=False) for v in sorted(self.values)) + "}"


@dataclass(frozen=True)
class IntervalValue(LeafValue):
    lower: float
    upper: float
    variant = "interval"

    def __post_init__(self):
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("границы интервала должны быть конечными")
        if self.lower > self.upper:
            raise ValueError(f"некорректный интервал: [{self.lower}, {self.upper}]")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def render(self) -> str:
        return f"[{_format_real(self.lower)}, {_format_real(self.upper)}]"


@dataclass(frozen=True)
class ExpressionValue(LeafValue):
    # Условное выражение (только в документах-возможностях).
    # Равенство определяется деревом выражения, исходный текст хранится для отчётов.

    expr: Any
    source: Optional[str] = field(default=None, compare=False)
    variant = "expression"

    def __post_init__(self):
        if self.source is None:
            object.__setattr__(self, "source", self.expr.to_source())

    def render(self) -> str:
        return self.source


ConcreteValue = Union[BooleanValue, TextValue, IntegerValue, RealValue, DurationValue,
                      DataSizeValue, TextSetValue, IntervalValue]


def numeric_value(value: LeafValue) -> Optional[Union[int, float]]:
    # Числовое содержимое значения или None для нечисловых вариантов
    if isinstance(value, (IntegerValue, RealValue)):
        return value.value
    if isinstance(value, DurationValue):
        return value.seconds
    if isinstance(value, DataSizeValue):
        return value.size_bytes
    return None


def is_compatible(value: LeafValue, leaf_type: LeafType) -> bool:
    kind = leaf_type.kind
    if isinstance(value, ExpressionValue):
        return True
    if isinstance(value, BooleanValue):
        return kind is LeafKind.BOOLEAN
    if isinstance(value, TextValue):
        return kind is LeafKind.TEXT
    if isinstance(value, TextSetValue):
        return kind in (LeafKind.TEXT, LeafKind.TEXT_SET)
    if isinstance(value, IntegerValue):
        return kind is LeafKind.INTEGER
    if isinstance(value, RealValue):
        return kind is LeafKind.REAL
    if isinstance(value, DurationValue):
        return kind is LeafKind.DURATION
    if isinstance(value, DataSizeValue):
        return kind is LeafKind.DATA_SIZE
    if isinstance(value, IntervalValue):
        return kind in (LeafKind.INTEGER, LeafKind.REAL)
    return False


def coerce_to_leaf(value: LeafValue, leaf_type: LeafType) -> LeafValue:
    # Приведение вычисленного значения к виду листа.
    # Целое вещественное -> integer, целое -> real/duration/data-size, текст -> множество из одного элемента.
    # Несводимые значения возвращаются как есть (валидация их отклонит).

    kind = leaf_type.kind
    if kind is LeafKind.TEXT_SET and isinstance(value, TextValue):
        return TextSetValue(frozenset({value.value}))
    number = numeric_value(value)
    if number is None or isinstance(value, (DurationValue, DataSizeValue)):
        return value
    if kind is LeafKind.INTEGER and isinstance(value, RealValue) and value.value.is_integer():
        return IntegerValue(int(value.value))
    if kind is LeafKind.REAL and isinstance(value, IntegerValue):
        return RealValue(float(value.value))
    if kind is LeafKind.DURATION:
        return DurationValue(float(number))
    if kind is LeafKind.DATA_SIZE and (isinstance(value, IntegerValue) or float(number).is_integer()):
        return DataSizeValue(int(number))
    return value


# ДОКУМЕНТЫ

class Role(Enum):
    REQUIREMENT = "requirement"
    CAPABILITY = "capability"


# Четыре тестовых атрибута расширенной таксономии, лежат в корне
ATTRIBUTE_NAMES: Tuple[str, ...] = (
    "safety_hazard_mitigation",
    "test_complexity",
    "test_environment_fidelity",
    "sut_fidelity",
)


@dataclass(frozen=True)
class TestAttributes:
    # Значения тестовых атрибутов документа: уровень 1..3, выражение
    # (только у возможностей) или None, если атрибут не назначен

    __test__ = False  # не тестовый класс для pytest

    safety_hazard_mitigation: Union[int, ExpressionValue, None]
    test_complexity: Union[int, ExpressionValue, None]
    test_environment_fidelity: Union[int, ExpressionValue, None]
    sut_fidelity: Union[int, ExpressionValue, None]

    def as_tuple(self) -> tuple:
        return (self.safety_hazard_mitigation, self.test_complexity,
                self.test_environment_fidelity, self.sut_fidelity)


@dataclass(frozen=True)
class SourceLocation:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class OddDocument:
    # Конкретное назначение значений листьям таксономии.
    # role - требование тест-кейса или возможность окружения.
    # locations хранит позиции значений в исходном файле и не участвует в сравнении.

    id: str
    role: Role
    taxonomy: Taxonomy
    assignments: Mapping[str, LeafValue] = field(default_factory=dict)
    name: Optional[str] = None
    category: Optional[str] = None
    locations: Mapping[str, SourceLocation] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments))

    @property
    def taxonomy_id(self) -> str:
        return self.taxonomy.id

    @property
    def attributes(self) -> TestAttributes:
        levels = []
        for name in ATTRIBUTE_NAMES:
            value = self.assignments.get(name)
            if isinstance(value, IntegerValue):
                levels.append(value.value)
            elif isinstance(value, ExpressionValue):
                levels.append(value)
            else:
                levels.append(None)
        return TestAttributes(*levels)

    @property
    def is_concrete(self) -> bool:
        return not any(isinstance(v, ExpressionValue) for v in self.assignments.values())

    def expressions(self) -> List[Tuple[str, ExpressionValue]]:
        return [(p, v) for p, v in sorted(self.assignments.items()) if isinstance(v, ExpressionValue)]

    def with_role(self, role: Role) -> "OddDocument":
        return OddDocument(self.id, role, self.taxonomy, self.assignments, self.name,
                           self.category, self.locations)

    def with_assignments(self, assignments: Mapping[str, LeafValue]) -> "OddDocument":
        return OddDocument(self.id, self.role, self.taxonomy, assignments, self.name,
                           self.category, self.locations)


def get_leaf(doc: OddDocument, path: str) -> LeafValue:
    # Значение назначенного листа; документ не изменяется
    try:
        return doc.assignments[path]
    except KeyError:
        raise UnknownPath(f"путь не назначен в документе {doc.id}", path) from None


# ВАЛИДАЦИЯ

class ViolationCode(Enum):
    UNKNOWN_PATH = "unknown-path"
    NOT_A_LEAF = "not-a-leaf"
    TYPE_MISMATCH = "type-mismatch"
    CONSTRAINT = "constraint"
    MISSING_REQUIRED = "missing-required"
    EXPRESSION_IN_REQUIREMENT = "expression-in-requirement"
    UNKNOWN_REFERENCE = "unknown-reference"
    EXPRESSION_TYPE = "expression-type"


@dataclass(frozen=True)
class Violation:
    path: str
    code: ViolationCode
    message: str

    def sort_key(self) -> tuple:
        return self.path, self.code.value, self.message


def validate_document(doc: OddDocument, tax: Taxonomy) -> List[Violation]:
    # Проверка документа по таксономии. Нарушения возвращаются данными,
    # результат не зависит от порядка назначений.
    #
    # Args:
    #     doc: Проверяемый документ
    #     tax: Таксономия, по которой выполняется проверка
    #
    # Returns:
    #     Отсортированный список нарушений (пустой, если документ корректен)

    violations: List[Violation] = []

    for path, value in doc.assignments.items():
        node = tax.node(path)
        if node is None:
            violations.append(Violation(path, ViolationCode.UNKNOWN_PATH,
                                        f"путь отсутствует в таксономии {tax.id}"))
            continue
        if not node.is_leaf:
            violations.append(Violation(path, ViolationCode.NOT_A_LEAF,
                                        "путь указывает на ветвь, а не на лист"))
            continue
        violations.extend(_check_value(path, value, node.leaf_type, doc.role, tax))

    for path, node in tax.leaves():
        if node.required and path not in doc.assignments:
            violations.append(Violation(path, ViolationCode.MISSING_REQUIRED,
                                        "обязательный лист не назначен"))

    return sorted(set(violations), key=Violation.sort_key)


def _check_value(path: str, value: LeafValue, leaf_type: LeafType, role: Role,
                 tax: Taxonomy) -> List[Violation]:
    if isinstance(value, ExpressionValue):
        if role is Role.REQUIREMENT:
            return [Violation(path, ViolationCode.EXPRESSION_IN_REQUIREMENT,
                              "выражения допустимы только в документах-возможностях")]
        return _check_expression(path, value, leaf_type, tax)

    if not is_compatible(value, leaf_type):
        return [Violation(path, ViolationCode.TYPE_MISMATCH,
                          f"значение вида {value.variant} несовместимо с листом вида {leaf_type.kind.value}")]

    if isinstance(value, TextSetValue) and not value.values:
        return [Violation(path, ViolationCode.CONSTRAINT, "множество значений не может быть пустым")]

    constraint = leaf_type.constraint
    if constraint is None:
        return []
    if isinstance(value, IntervalValue):
        bounds = (value.lower, value.upper)
    else:
        number = numeric_value(value)
        bounds = () if number is None else (number,)
    for bound in bounds:
        if not constraint.contains(bound):
            return [Violation(path, ViolationCode.CONSTRAINT,
                              f"значение {value.render()} вне диапазона "
                              f"[{constraint.lower:g}, {constraint.upper:g}]")]
    return []


def _check_expression(path: str, value: ExpressionValue, leaf_type: LeafType,
                      tax: Taxonomy) -> List[Violation]:
    # Статическая проверка выражения: ссылки req: и согласованность видов операндов
    violations = []
    for ref in value.expr.references():
        node = tax.node(ref)
        if node is None or not node.is_leaf:
            violations.append(Violation(path, ViolationCode.UNKNOWN_REFERENCE,
                                        f"ссылка req:{ref} не указывает на лист таксономии"))
    if violations:
        return violations

    def kind_of(ref: str) -> LeafKind:
        return tax.leaf_type(ref).kind

    problems, result = value.expr.check(kind_of)
    if not problems and result is not None and not _result_fits(result, leaf_type.kind):
        problems = [f"результат вида {result} несовместим с листом вида {leaf_type.kind.value}"]
    return [Violation(path, ViolationCode.EXPRESSION_TYPE, p) for p in problems]


def _result_fits(result: str, kind: LeafKind) -> bool:
    if result == "numeric":
        return kind.is_numeric
    if result == "boolean":
        return kind is LeafKind.BOOLEAN
    if result in ("text", "text-set"):
        return kind in (LeafKind.TEXT, LeafKind.TEXT_SET)
    return False
