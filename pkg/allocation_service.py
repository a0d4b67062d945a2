import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import config
from containment import ComparisonVerdict, generic_compare
from environments import EnvironmentCategory
from errors import AllocationError, DuplicateId, OddError
from odd_model import ATTRIBUTE_NAMES, IntegerValue, OddDocument, Role

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Environment:
    # Тестовое окружение: идентификатор, название и документ-возможность

    id: str
    name: str
    capability: OddDocument
    category: Optional[EnvironmentCategory] = None

    @classmethod
    def from_document(cls, doc: OddDocument) -> "Environment":
        category = EnvironmentCategory(doc.category) if doc.category else None
        return cls(id=doc.id, name=doc.name or doc.id, capability=doc, category=category)


@dataclass(frozen=True)
class UnallocatedCase:
    # Тест-кейс без подходящих окружений; failures - окружение -> непрошедшие пути
    test_case_id: str
    failures: Dict[str, List[str]] = field(default_factory=dict)


@dataclass
class AllocationReport:
    test_case_ids: List[str]
    environments: List[Environment]
    matrix: Dict[Tuple[str, str], ComparisonVerdict]
    feasible: Dict[str, List[str]]
    unallocated: List[UnallocatedCase]

    @property
    def environment_ids(self) -> List[str]:
        return [e.id for e in self.environments]

    def slack(self, test_case_id: str, environment_id: str) -> Optional[int]:
        # Запас по атрибутам для допустимой пары, иначе None
        verdict = self.matrix[(test_case_id, environment_id)]
        return attribute_slack(verdict) if verdict.within else None


def attribute_slack(verdict: ComparisonVerdict) -> int:
    # Сумма (уровень возможности - уровень требования) по четырём атрибутам.
    # Атрибуты, не назначенные в требовании, не учитываются.
    slack = 0
    for leaf in verdict.leaf_verdicts:
        if leaf.path in ATTRIBUTE_NAMES and isinstance(leaf.requirement, IntegerValue) \
                and isinstance(leaf.capability, IntegerValue):
            slack += leaf.capability.value - leaf.requirement.value
    return slack


def rank_feasible(verdicts: Mapping[str, ComparisonVerdict]) -> List[str]:
    # Ранжирование допустимых окружений одного тест-кейса:
    # по возрастанию запаса, при равенстве - по идентификатору окружения.
    #
    # Args:
    #     verdicts: Окружение -> вердикт (все с within = true)
    #
    # Returns:
    #     Упорядоченный список идентификаторов окружений

    not_within = sorted(env_id for env_id, v in verdicts.items() if not v.within)
    if not_within:
        raise ValueError(f"ранжируются только допустимые окружения: {', '.join(not_within)}")
    return sorted(verdicts, key=lambda env_id: (attribute_slack(verdicts[env_id]), env_id))


def _check_unique(ids: List[str], what: str):
    seen = set()
    for item in ids:
        if item in seen:
            raise DuplicateId(f"повторяющийся идентификатор {what}: {item}")
        seen.add(item)


def allocate(test_cases: Sequence[OddDocument], envs: Sequence[Environment],
             workers: Optional[int] = None) -> AllocationReport:
    # Распределение тест-кейсов по окружениям.
    # Полное декартово произведение сравнивается (при workers > 1 - в пуле потоков),
    # отчёт собирается детерминированно в порядке идентификаторов.
    #
    # Args:
    #     test_cases: Документы-требования тест-кейсов
    #     envs: Окружения с документами-возможностями
    #     workers: Число потоков (по умолчанию ODD_ALLOCATION_WORKERS)
    #
    # Returns:
    #     AllocationReport с матрицей, ранжированием и нераспределёнными кейсами

    _check_unique([t.id for t in test_cases], "тест-кейса")
    _check_unique([e.id for e in envs], "окружения")

    cases = sorted(test_cases, key=lambda t: t.id)
    environments = sorted(envs, key=lambda e: e.id)
    for case in cases:
        if case.role is not Role.REQUIREMENT:
            raise AllocationError(case.id, "-", OddError("тест-кейс должен быть требованием"))

    pairs = [(case, env) for case in cases for env in environments]

    def compare(pair):
        case, env = pair
        try:
            return generic_compare(env.capability, case)
        except OddError as e:
            raise AllocationError(case.id, env.id, e) from e

    workers = config.ALLOCATION_WORKERS if workers is None else workers
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(compare, pairs))
    else:
        results = [compare(pair) for pair in pairs]

    matrix = {(case.id, env.id): verdict for (case, env), verdict in zip(pairs, results)}

    feasible: Dict[str, List[str]] = {}
    unallocated: List[UnallocatedCase] = []
    for case in cases:
        row = {env.id: matrix[(case.id, env.id)] for env in environments}
        within = {env_id: v for env_id, v in row.items() if v.within}
        if within:
            feasible[case.id] = rank_feasible(within)
        else:
            failures = {env_id: [leaf.path for leaf in v.failures] for env_id, v in row.items()}
            unallocated.append(UnallocatedCase(case.id, failures))

    if unallocated:
        logger.warning(f"⚠️ Нет подходящего окружения для {len(unallocated)} тест-кейс(ов)")
    logger.info(f"✅ Распределено {len(feasible)} из {len(cases)} тест-кейсов по {len(environments)} окружениям")
    return AllocationReport([c.id for c in cases], environments, matrix, feasible, unallocated)
