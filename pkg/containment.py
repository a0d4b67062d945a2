import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from errors import LeafTypeError, TaxonomyMismatch
from evaluator import TraceEntry, concretize_with_trace
from odd_model import (BooleanValue, ExpressionValue, IntervalValue, LeafType, LeafValue, OddDocument,
                       TextSetValue, TextValue, is_compatible, numeric_value)

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)


class Rule(Enum):
    # Правило, по которому сравнивался лист
    EQUALITY = "equality"
    NUMERIC_LEQ = "numeric-leq"
    INTERVAL_CONTAINMENT = "interval-containment"
    SET_MEMBERSHIP = "set-membership"
    ORDINAL_LEQ = "ordinal-leq"
    MISSING_IN_CAPABILITY = "missing-in-capability"


@dataclass(frozen=True)
class LeafVerdict:
    path: str
    requirement: LeafValue
    capability: Optional[LeafValue]
    rule: Rule
    passed: bool
    message: str


@dataclass(frozen=True)
class ComparisonVerdict:
    # Итог сравнения: within истинно тогда и только тогда, когда прошли все листья требования

    capability_id: str
    requirement_id: str
    within: bool
    leaf_verdicts: Tuple[LeafVerdict, ...]
    trace: Tuple[TraceEntry, ...] = ()

    @property
    def failures(self) -> List[LeafVerdict]:
        return [v for v in self.leaf_verdicts if not v.passed]


def compare_leaf(req_value: LeafValue, cap_value: LeafValue, leaf_type: LeafType, path: str = "") -> LeafVerdict:
    # Сравнение одного листа требования с листом возможности.
    # Текст и логические значения - равенство; числа - требование <= возможности;
    # интервал возможности - вхождение; множество возможности - принадлежность.
    #
    # Args:
    #     req_value: Значение требования
    #     cap_value: Конкретное значение возможности
    #     leaf_type: Тип листа в таксономии
    #     path: Путь листа для вердикта
    #
    # Returns:
    #     LeafVerdict с применённым правилом

    for value in (req_value, cap_value):
        if isinstance(value, ExpressionValue):
            raise LeafTypeError("сравниваются только конкретные значения", path or None)
        if not is_compatible(value, leaf_type):
            raise LeafTypeError(f"значение вида {value.variant} несовместимо с листом вида "
                                f"{leaf_type.kind.value}", path or None)

    rule, passed = _apply(req_value, cap_value, leaf_type)
    sign = "⊆" if rule in (Rule.INTERVAL_CONTAINMENT, Rule.SET_MEMBERSHIP) else "<="
    if rule is Rule.EQUALITY:
        sign = "=="
    message = f"{req_value.render()} {sign} {cap_value.render()}" if passed else \
        f"требуется {req_value.render()}, доступно {cap_value.render()}"
    return LeafVerdict(path, req_value, cap_value, rule, passed, message)


def _apply(req: LeafValue, cap: LeafValue, leaf_type: LeafType) -> Tuple[Rule, bool]:
    numeric_rule = Rule.ORDINAL_LEQ if leaf_type.ordinal else Rule.NUMERIC_LEQ
    req_number, cap_number = numeric_value(req), numeric_value(cap)

    if isinstance(cap, IntervalValue):
        if isinstance(req, IntervalValue):
            return Rule.INTERVAL_CONTAINMENT, cap.lower <= req.lower and req.upper <= cap.upper
        if req_number is not None:
            return Rule.INTERVAL_CONTAINMENT, cap.contains(req_number)
    elif isinstance(req, IntervalValue) and cap_number is not None:
        return numeric_rule, req.upper <= cap_number

    if isinstance(cap, TextSetValue):
        if isinstance(req, TextValue):
            return Rule.SET_MEMBERSHIP, req.value in cap.values
        if isinstance(req, TextSetValue):
            return Rule.SET_MEMBERSHIP, req.values <= cap.values
    elif isinstance(req, TextSetValue) and isinstance(cap, TextValue):
        return Rule.SET_MEMBERSHIP, req.values <= {cap.value}

    if req_number is not None and cap_number is not None:
        return numeric_rule, req_number <= cap_number

    if (isinstance(req, BooleanValue) and isinstance(cap, BooleanValue)) or \
            (isinstance(req, TextValue) and isinstance(cap, TextValue)):
        return Rule.EQUALITY, req.value == cap.value

    raise LeafTypeError(f"несовместимые варианты {req.variant} и {cap.variant}")


def generic_compare(cap: OddDocument, req: OddDocument) -> ComparisonVerdict:
    # Рекурсивное сравнение требования с возможностью.
    # Возможность сначала конкретизируется по требованию, затем сравнивается
    # каждый лист, назначенный в требовании (обход в глубину по порядку объявления).
    # Листья, назначенные только в возможности, не учитываются.
    #
    # Args:
    #     cap: Документ-возможность окружения
    #     req: Документ-требование тест-кейса
    #
    # Returns:
    #     ComparisonVerdict с вердиктами по листьям и трассировкой

    if not cap.taxonomy.is_compatible(req.taxonomy):
        raise TaxonomyMismatch(f"таксономии {cap.taxonomy_id} и {req.taxonomy_id} несовместимы")

    concrete, trace = concretize_with_trace(cap, req)

    declared = [p for p in req.taxonomy.leaf_paths() if p in req.assignments]
    undeclared = sorted(p for p in req.assignments if p not in set(declared))

    verdicts = []
    for path in declared + undeclared:
        req_value = req.assignments[path]
        cap_value = concrete.assignments.get(path)
        if cap_value is None:
            verdicts.append(LeafVerdict(path, req_value, None, Rule.MISSING_IN_CAPABILITY, False,
                                        f"лист не назначен в возможности {cap.id}"))
            continue
        verdicts.append(compare_leaf(req_value, cap_value, req.taxonomy.leaf_type(path), path))

    within = all(v.passed for v in verdicts)
    logger.debug(f"{req.id} в возможностях {cap.id}: {within} "
                 f"({sum(not v.passed for v in verdicts)} несоответствий)")
    return ComparisonVerdict(cap.id, req.id, within, tuple(verdicts), tuple(trace))
