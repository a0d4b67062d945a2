# Стратегии hypothesis: случайные таксономии, документы и монотонное расширение возможностей

import string

import hypothesis.strategies as st

from containment import compare_leaf
from expressions import (And, Compare, CompareOp, IfThenElse, Literal, Not, Or, RequirementRef,
                         parse_expression)
from odd_model import (ROOT_NAME, BooleanValue, DataSizeValue, DurationValue, ExpressionValue,
                       IntegerValue, IntervalValue, LeafKind, LeafType, OddDocument, RealValue, Role,
                       Taxonomy, TaxonomyNode, TextSetValue, TextValue)

WORDS = ("alpha", "beta", "gamma", "delta", "epsilon")

names = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True).filter(lambda n: n != "kind")
paths = st.lists(names, min_size=1, max_size=4).map("/".join)

reals = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
increments = st.floats(min_value=0.0, max_value=1e3, allow_nan=False, allow_infinity=False)
texts = st.text(alphabet=string.ascii_letters + string.digits + " -_:.'\"#", max_size=12)


@st.composite
def taxonomies(draw, max_leaves=30):
    # Случайная таксономия: до четырёх групп, в каждой - листья случайных видов
    count = draw(st.integers(min_value=1, max_value=max_leaves))
    group_count = draw(st.integers(min_value=1, max_value=4))
    groups = {}
    for i in range(count):
        kind = draw(st.sampled_from(list(LeafKind)))
        ordinal = kind is LeafKind.INTEGER and draw(st.booleans())
        leaf = TaxonomyNode(f"leaf_{i}", leaf_type=LeafType(kind, ordinal=ordinal))
        groups.setdefault(draw(st.integers(0, group_count - 1)), []).append(leaf)
    children = tuple(TaxonomyNode(f"group_{g}", tuple(leaves)) for g, leaves in sorted(groups.items()))
    return Taxonomy(id="random", root=TaxonomyNode(ROOT_NAME, children))


def scalar_values(kind: LeafKind):
    if kind is LeafKind.BOOLEAN:
        return st.builds(BooleanValue, st.booleans())
    if kind is LeafKind.TEXT:
        return st.builds(TextValue, st.sampled_from(WORDS))
    if kind is LeafKind.INTEGER:
        return st.builds(IntegerValue, st.integers(-1000, 1000))
    if kind is LeafKind.REAL:
        return st.builds(RealValue, reals)
    if kind is LeafKind.DURATION:
        return st.builds(DurationValue, st.floats(0.0, 1e5, allow_nan=False))
    if kind is LeafKind.DATA_SIZE:
        return st.builds(DataSizeValue, st.integers(0, 10 ** 9))
    return st.builds(TextSetValue, st.frozensets(st.sampled_from(WORDS), min_size=1))


def intervals():
    return st.tuples(reals, increments).map(lambda t: IntervalValue(t[0], t[0] + t[1]))


def concrete_values(kind: LeafKind):
    # Все конкретные варианты, совместимые с видом листа
    options = [scalar_values(kind)]
    if kind in (LeafKind.INTEGER, LeafKind.REAL):
        options.append(intervals())
    if kind is LeafKind.TEXT:
        options.append(st.builds(TextSetValue, st.frozensets(st.sampled_from(WORDS), min_size=1)))
    return st.one_of(options)


@st.composite
def documents(draw, tax: Taxonomy, role: Role, doc_id: str = "doc", values=concrete_values):
    assignments = {}
    for path, node in tax.leaves():
        if draw(st.booleans()):
            assignments[path] = draw(values(node.leaf_type.kind))
    return OddDocument(id=doc_id, role=role, taxonomy=tax, assignments=assignments)


@st.composite
def comparison_triples(draw):
    tax = draw(taxonomies())
    req = draw(documents(tax, Role.REQUIREMENT, "req"))
    cap = draw(documents(tax, Role.CAPABILITY, "cap"))
    return tax, req, cap


def flat_oracle(req: OddDocument, cap: OddDocument) -> bool:
    # Независимая проверка: плоский перебор (путь, требование, возможность)
    triples = [(path, value, cap.assignments.get(path)) for path, value in req.assignments.items()]
    for path, req_value, cap_value in triples:
        if cap_value is None:
            return False
        if not compare_leaf(req_value, cap_value, req.taxonomy.leaf_type(path), path).passed:
            return False
    return True


# РАСШИРЕНИЕ ВОЗМОЖНОСТЕЙ

@st.composite
def widened(draw, value, keep_variant: bool = False):
    # Значение, покрывающее исходное. keep_variant=False допускает смену варианта
    # (число -> интервал, текст -> множество); keep_variant=True только увеличивает.
    if isinstance(value, IntervalValue):
        return IntervalValue(value.lower - draw(increments), value.upper + draw(increments))
    if isinstance(value, IntegerValue):
        if not keep_variant and draw(st.booleans()):
            return IntervalValue(value.value - draw(increments), value.value + draw(increments))
        return IntegerValue(value.value + draw(st.integers(0, 100)))
    if isinstance(value, RealValue):
        if not keep_variant and draw(st.booleans()):
            return IntervalValue(value.value - draw(increments), value.value + draw(increments))
        return RealValue(value.value + draw(increments))
    if isinstance(value, DurationValue):
        return DurationValue(value.seconds + draw(increments))
    if isinstance(value, DataSizeValue):
        return DataSizeValue(value.size_bytes + draw(st.integers(0, 10 ** 6)))
    if isinstance(value, TextSetValue):
        return TextSetValue(value.values | draw(st.frozensets(st.sampled_from(WORDS))))
    if isinstance(value, TextValue) and not keep_variant and draw(st.booleans()):
        return TextSetValue({value.value} | draw(st.frozensets(st.sampled_from(WORDS))))
    return value


@st.composite
def widened_document(draw, doc: OddDocument, keep_variant: bool = False):
    assignments = {p: draw(widened(v, keep_variant)) for p, v in doc.assignments.items()}
    return OddDocument(id=doc.id + "_wide", role=Role.CAPABILITY, taxonomy=doc.taxonomy,
                       assignments=assignments)


# ДОКУМЕНТЫ ДЛЯ КРУГОВОГО ПРЕОБРАЗОВАНИЯ

def round_trip_values(kind: LeafKind, role: Role):
    options = [concrete_values(kind)]
    if kind is LeafKind.TEXT:
        options.append(st.builds(TextValue, texts))
    if role is Role.CAPABILITY and kind is LeafKind.INTEGER:
        source = "if true then 1 else 2"
        options.append(st.just(ExpressionValue(parse_expression(source), source)))
    return st.one_of(options)


@st.composite
def round_trip_documents(draw):
    tax = draw(taxonomies(max_leaves=12))
    role = draw(st.sampled_from(list(Role)))
    doc_id = draw(st.from_regex(r"[a-z][a-z0-9_]{0,10}", fullmatch=True))
    doc = draw(documents(tax, role, doc_id, values=lambda kind: round_trip_values(kind, role)))
    return tax, doc


# ДЕРЕВЬЯ ВЫРАЖЕНИЙ

literals = st.one_of(
    st.builds(BooleanValue, st.booleans()),
    st.builds(IntegerValue, st.integers(-10 ** 6, 10 ** 6)),
    st.builds(RealValue, reals),
    st.builds(TextValue, st.text(max_size=8)),
).map(Literal)

leaves = st.one_of(literals, st.builds(RequirementRef, paths))


def _extend(children):
    return st.one_of(
        st.builds(Compare, st.sampled_from(list(CompareOp)), children, children),
        st.builds(And, st.lists(children, min_size=2, max_size=3).map(tuple)),
        st.builds(Or, st.lists(children, min_size=2, max_size=3).map(tuple)),
        st.builds(Not, children),
        st.builds(IfThenElse, children, children, children),
    )


expression_trees = st.recursive(leaves, _extend, max_leaves=12)
