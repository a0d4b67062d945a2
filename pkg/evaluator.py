import logging
from dataclasses import dataclass, field
from typing import List, Tuple

from errors import ConcretizationError, LeafTypeError, OddError, TaxonomyMismatch, UnboundReference
from expressions import And, Compare, CompareOp, Expression, IfThenElse, Literal, Not, Or, RequirementRef
from odd_model import (BooleanValue, ExpressionValue, LeafValue, OddDocument, Role, TextValue,
                       coerce_to_leaf, numeric_value, validate_document)

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceEntry:
    # Запись трассировки: какое выражение листа к какому значению свелось
    path: str
    expression: str
    value: LeafValue


@dataclass
class EvaluationContext:
    requirement: OddDocument
    trace: List[TraceEntry] = field(default_factory=list)


_COMPARATORS = {
    CompareOp.LT: lambda a, b: a < b,
    CompareOp.LE: lambda a, b: a <= b,
    CompareOp.GT: lambda a, b: a > b,
    CompareOp.GE: lambda a, b: a >= b,
    CompareOp.EQ: lambda a, b: a == b,
    CompareOp.NE: lambda a, b: a != b,
}


def evaluate_expression(expr: Expression, ctx: EvaluationContext) -> LeafValue:
    # Вычисление выражения возможности по документу-требованию.
    # and/or вычисляют все операнды, if - только выбранную ветвь.
    # Вещественные сравнения точные, без допусков.
    #
    # Args:
    #     expr: Корень дерева выражения
    #     ctx: Контекст с документом-требованием
    #
    # Returns:
    #     Конкретное значение (не выражение)

    if isinstance(expr, Literal):
        return expr.value

    if isinstance(expr, RequirementRef):
        value = ctx.requirement.assignments.get(expr.path)
        if value is None:
            raise UnboundReference(f"req:{expr.path} не назначен в требовании {ctx.requirement.id}")
        if isinstance(value, ExpressionValue):
            raise LeafTypeError(f"req:{expr.path} содержит выражение")
        return value

    if isinstance(expr, Compare):
        left = evaluate_expression(expr.left, ctx)
        right = evaluate_expression(expr.right, ctx)
        return BooleanValue(_compare(expr.op, left, right))

    if isinstance(expr, (And, Or)):
        results = [_boolean(evaluate_expression(o, ctx), type(expr).__name__.lower()) for o in expr.operands]
        return BooleanValue(all(results) if isinstance(expr, And) else any(results))

    if isinstance(expr, Not):
        return BooleanValue(not _boolean(evaluate_expression(expr.operand, ctx), "not"))

    if isinstance(expr, IfThenElse):
        if _boolean(evaluate_expression(expr.condition, ctx), "if"):
            return evaluate_expression(expr.then_branch, ctx)
        return evaluate_expression(expr.else_branch, ctx)

    raise LeafTypeError(f"неизвестный узел выражения: {type(expr).__name__}")


def _boolean(value: LeafValue, where: str) -> bool:
    if not isinstance(value, BooleanValue):
        raise LeafTypeError(f"операнд {where} должен быть логическим, получено {value.variant}")
    return value.value


def _compare(op: CompareOp, left: LeafValue, right: LeafValue) -> bool:
    left_number, right_number = numeric_value(left), numeric_value(right)
    if left_number is not None and right_number is not None:
        return _COMPARATORS[op](left_number, right_number)
    same_kind = (isinstance(left, TextValue) and isinstance(right, TextValue)) or \
                (isinstance(left, BooleanValue) and isinstance(right, BooleanValue))
    if same_kind and op.is_equality:
        return _COMPARATORS[op](left.value, right.value)
    raise LeafTypeError(f"сравнение {left.variant} {op.value} {right.variant} недопустимо")


def concretize_with_trace(cap: OddDocument, req: OddDocument) -> Tuple[OddDocument, List[TraceEntry]]:
    # Конкретизация возможности: каждое выражение заменяется своим значением.
    # Исходные документы не изменяются.
    #
    # Args:
    #     cap: Документ-возможность (может содержать выражения)
    #     req: Документ-требование без выражений
    #
    # Returns:
    #     Пара (конкретизированная возможность, трассировка вычислений)

    if req.role is not Role.REQUIREMENT:
        raise LeafTypeError(f"документ {req.id} не является требованием")
    if not cap.taxonomy.is_compatible(req.taxonomy):
        raise TaxonomyMismatch(f"таксономии {cap.taxonomy_id} и {req.taxonomy_id} несовместимы")

    expressions = cap.expressions()
    if not expressions:
        return cap, []

    ctx = EvaluationContext(requirement=req)
    assignments = dict(cap.assignments)
    for path, value in expressions:
        try:
            result = evaluate_expression(value.expr, ctx)
        except OddError as e:
            raise e.at(path)
        result = coerce_to_leaf(result, cap.taxonomy.leaf_type(path))
        assignments[path] = result
        ctx.trace.append(TraceEntry(path, value.source, result))
        logger.debug(f"{cap.id}: {path} = {result.render()} для {req.id}")

    concrete = cap.with_assignments(assignments)
    violations = validate_document(concrete, cap.taxonomy)
    if violations:
        first = violations[0]
        raise ConcretizationError(f"результат конкретизации не прошёл проверку: {first.message}",
                                  violations, path=first.path)
    return concrete, ctx.trace


def concretize_capability(cap: OddDocument, req: OddDocument) -> OddDocument:
    concrete, _ = concretize_with_trace(cap, req)
    return concrete
