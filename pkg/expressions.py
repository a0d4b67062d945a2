import json
import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple

from arpeggio import EOF, NoMatch, ParserPython, Terminal, ZeroOrMore
from arpeggio import Optional as OptionalMatch
from arpeggio import RegExMatch as _

from errors import ParseDiagnostic, ParseError, Severity
from odd_model import (BooleanValue, IntegerValue, LeafKind, LeafValue, RealValue, TextValue,
                       is_valid_path)

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)

REQ_PREFIX = "req:"

# Вид результата для статической проверки выражений
NUMERIC, BOOLEAN, TEXT, TEXT_SET = "numeric", "boolean", "text", "text-set"

KindLookup = Callable[[str], LeafKind]
CheckResult = Tuple[List[str], Optional[str]]


class CompareOp(Enum):
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    EQ = "=="
    NE = "!="

    @property
    def is_equality(self) -> bool:
        return self in (CompareOp.EQ, CompareOp.NE)


# ДЕРЕВО ВЫРАЖЕНИЯ

class Expression:
    # Базовый класс узлов выражения возможности.
    # Ссылки req: ведут только в документ-требование, поэтому вычисление не рекурсивно.

    def references(self) -> List[str]:
        return []

    def check(self, kind_of: KindLookup) -> CheckResult:
        raise NotImplementedError

    def to_source(self) -> str:
        return format_expression(self)


@dataclass(frozen=True)
class Literal(Expression):
    value: LeafValue

    def check(self, kind_of: KindLookup) -> CheckResult:
        if isinstance(self.value, BooleanValue):
            return [], BOOLEAN
        if isinstance(self.value, TextValue):
            return [], TEXT
        return [], NUMERIC


@dataclass(frozen=True)
class RequirementRef(Expression):
    path: str

    def references(self) -> List[str]:
        return [self.path]

    def check(self, kind_of: KindLookup) -> CheckResult:
        kind = kind_of(self.path)
        if kind.is_numeric:
            return [], NUMERIC
        if kind is LeafKind.BOOLEAN:
            return [], BOOLEAN
        if kind is LeafKind.TEXT:
            return [], TEXT
        return [], TEXT_SET


@dataclass(frozen=True)
class Compare(Expression):
    op: CompareOp
    left: Expression
    right: Expression

    def references(self) -> List[str]:
        return self.left.references() + self.right.references()

    def check(self, kind_of: KindLookup) -> CheckResult:
        left_problems, left = self.left.check(kind_of)
        right_problems, right = self.right.check(kind_of)
        problems = left_problems + right_problems
        if left is None or right is None:
            return problems, BOOLEAN
        if left == right == NUMERIC:
            return problems, BOOLEAN
        if left == right and left in (TEXT, BOOLEAN) and self.op.is_equality:
            return problems, BOOLEAN
        problems.append(f"сравнение {left} {self.op.value} {right} недопустимо")
        return problems, BOOLEAN


@dataclass(frozen=True)
class And(Expression):
    operands: Tuple[Expression, ...]

    def references(self) -> List[str]:
        return [r for o in self.operands for r in o.references()]

    def check(self, kind_of: KindLookup) -> CheckResult:
        return _check_logical("and", self.operands, kind_of)


@dataclass(frozen=True)
class Or(Expression):
    operands: Tuple[Expression, ...]

    def references(self) -> List[str]:
        return [r for o in self.operands for r in o.references()]

    def check(self, kind_of: KindLookup) -> CheckResult:
        return _check_logical("or", self.operands, kind_of)


@dataclass(frozen=True)
class Not(Expression):
    operand: Expression

    def references(self) -> List[str]:
        return self.operand.references()

    def check(self, kind_of: KindLookup) -> CheckResult:
        return _check_logical("not", (self.operand,), kind_of)


@dataclass(frozen=True)
class IfThenElse(Expression):
    condition: Expression
    then_branch: Expression
    else_branch: Expression

    def references(self) -> List[str]:
        return (self.condition.references() + self.then_branch.references()
                + self.else_branch.references())

    def check(self, kind_of: KindLookup) -> CheckResult:
        problems, cond = self.condition.check(kind_of)
        then_problems, then_kind = self.then_branch.check(kind_of)
        else_problems, else_kind = self.else_branch.check(kind_of)
        problems += then_problems + else_problems
        if cond not in (None, BOOLEAN):
            problems.append(f"условие if должно быть логическим, получено {cond}")
        if then_kind is not None and else_kind is not None and then_kind != else_kind:
            problems.append(f"ветви if имеют разные виды: {then_kind} и {else_kind}")
        return problems, then_kind if then_kind is not None else else_kind


def _check_logical(name: str, operands, kind_of: KindLookup) -> CheckResult:
    problems = []
    for operand in operands:
        operand_problems, kind = operand.check(kind_of)
        problems += operand_problems
        if kind not in (None, BOOLEAN):
            problems.append(f"операнд {name} должен быть логическим, получено {kind}")
    return problems, BOOLEAN


# ГРАММАТИКА (Arpeggio PEG)
# Приоритет: not > сравнение > and > or; if-then-else - самая слабая форма.

def formula():
    return expression, EOF


def expression():
    return [conditional, disjunction]


def conditional():
    return "if", expression, "then", expression, "else", expression


def disjunction():
    return conjunction, ZeroOrMore("or", conjunction)


def conjunction():
    return comparison, ZeroOrMore("and", comparison)


def comparison():
    return negation, OptionalMatch(comp_op, negation)


def negation():
    return [negated, primary]


def negated():
    return "not", negation


def primary():
    return [boolean, number, string, req_ref, group]


def group():
    return "(", expression, ")"


def comp_op():
    return _(r"<=|>=|==|!=|<|>")


def boolean():
    return _(r"(true|false)\b")


def number():
    return _(r"-?\d+(\.\d+)?([eE][+-]?\d+)?")


def string():
    return _(r'"(?:[^"\\]|\\.)*"')


def req_ref():
    return _(r"req:[^\s()<>=!]*")


# Парсер Arpeggio не потокобезопасен: создаём один экземпляр и сериализуем доступ
_PARSER = None
_PARSER_LOCK = threading.Lock()


def _get_parser() -> ParserPython:
    global _PARSER
    if _PARSER is None:
        # autokwd: ключевые слова сопоставляются только целым словом
        _PARSER = ParserPython(formula, skipws=True, reduce_tree=False, autokwd=True)
    return _PARSER


class _SyntaxIssue(Exception):
    def __init__(self, position: int, message: str):
        super().__init__(message)
        self.position = position
        self.message = message


class _TreeBuilder:
    # Строит дерево Expression из дерева разбора Arpeggio.
    # Анонимные узлы (повторения, ключевые слова, скобки) разворачиваются в список детей.

    def build(self, node):
        method = getattr(self, "_rule_" + node.rule_name, None) if node.rule_name else None
        if method is not None:
            return method(node)
        if isinstance(node, Terminal):
            return None
        return self._collect(node)

    def _collect(self, node) -> list:
        items = []
        for child in node:
            built = self.build(child)
            if isinstance(built, list):
                items.extend(built)
            elif built is not None:
                items.append(built)
        return items

    def _operands(self, node) -> List[Expression]:
        return [item for item in self._collect(node) if isinstance(item, Expression)]

    def _rule_formula(self, node):
        return self._operands(node)[0]

    def _rule_expression(self, node):
        return self._operands(node)[0]

    def _rule_conditional(self, node):
        condition, then_branch, else_branch = self._operands(node)
        return IfThenElse(condition, then_branch, else_branch)

    def _rule_disjunction(self, node):
        operands = self._operands(node)
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def _rule_conjunction(self, node):
        operands = self._operands(node)
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def _rule_comparison(self, node):
        items = self._collect(node)
        operands = [i for i in items if isinstance(i, Expression)]
        if len(operands) == 1:
            return operands[0]
        op = next(i for i in items if isinstance(i, CompareOp))
        return Compare(op, operands[0], operands[1])

    def _rule_negation(self, node):
        return self._operands(node)[0]

    def _rule_negated(self, node):
        return Not(self._operands(node)[0])

    def _rule_primary(self, node):
        return self._operands(node)[0]

    def _rule_group(self, node):
        return self._operands(node)[0]

    def _rule_comp_op(self, node):
        return CompareOp(node.value)

    def _rule_boolean(self, node):
        return Literal(BooleanValue(node.value == "true"))

    def _rule_number(self, node):
        text = node.value
        if not math.isfinite(float(text)):
            raise _SyntaxIssue(node.position, f"число {text} вне диапазона вещественных значений")
        if any(c in text for c in ".eE"):
            return Literal(RealValue(float(text)))
        return Literal(IntegerValue(int(text)))

    def _rule_string(self, node):
        try:
            return Literal(TextValue(json.loads(node.value)))
        except ValueError:
            raise _SyntaxIssue(node.position, f"некорректная строка {node.value}") from None

    def _rule_req_ref(self, node):
        path = node.value[len(REQ_PREFIX):]
        if not is_valid_path(path):
            raise _SyntaxIssue(node.position, f"некорректный путь ссылки {node.value!r}")
        return RequirementRef(path)


def _describe_expected(rules) -> str:
    names = []
    for rule in rules:
        name = getattr(rule, "rule_name", "") or getattr(rule, "to_match", "") or rule.name
        if name not in names:
            names.append(str(name))
    return ", ".join(names)


def parse_expression(source: str, line_offset: int = 0, column_offset: int = 0) -> Expression:
    # Разбор выражения возможности в дерево Expression.
    #
    # Args:
    #     source: Текст выражения
    #     line_offset, column_offset: Смещение начала выражения во внешнем файле
    #         (для диагностик выражений, встроенных в документ)
    #
    # Returns:
    #     Корень дерева выражения; при ошибке - ParseError с диагностикой

    with _PARSER_LOCK:
        parser = _get_parser()
        try:
            tree = parser.parse(source)
            return _TreeBuilder().build(tree)
        except NoMatch as e:
            line, col = parser.pos_to_linecol(e.position)
            message = f"синтаксическая ошибка выражения, ожидалось: {_describe_expected(e.rules)}"
        except _SyntaxIssue as e:
            line, col = parser.pos_to_linecol(e.position)
            message = e.message

    if line == 1:
        col += column_offset
    diagnostic = ParseDiagnostic(Severity.ERROR, line + line_offset, col, message)
    logger.debug(f"Ошибка разбора выражения: {diagnostic}")
    raise ParseError([diagnostic])


# ПЕЧАТЬ ВЫРАЖЕНИЙ
# Составные подвыражения всегда берутся в скобки: parse(format(e)) == e.

def _format_operand(expr: Expression) -> str:
    text = format_expression(expr)
    if isinstance(expr, (Literal, RequirementRef)):
        return text
    return f"({text})"


def format_expression(expr: Expression) -> str:
    if isinstance(expr, Literal):
        return expr.value.render()
    if isinstance(expr, RequirementRef):
        return REQ_PREFIX + expr.path
    if isinstance(expr, Compare):
        return f"{_format_operand(expr.left)} {expr.op.value} {_format_operand(expr.right)}"
    if isinstance(expr, And):
        return " and ".join(_format_operand(o) for o in expr.operands)
    if isinstance(expr, Or):
        return " or ".join(_format_operand(o) for o in expr.operands)
    if isinstance(expr, Not):
        return f"not {_format_operand(expr.operand)}"
    if isinstance(expr, IfThenElse):
        return (f"if {_format_operand(expr.condition)} then {_format_operand(expr.then_branch)} "
                f"else {_format_operand(expr.else_branch)}")
    raise TypeError(f"неизвестный узел выражения: {type(expr).__name__}")
