import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)


class EnvironmentCategory(Enum):
    # Перечисление категорий тестовых окружений.
    # Значение используется в поле category документа-возможности.

    FIELD = "field"  # Испытания на дорогах общего пользования
    TRACK = "track"  # Полигон
    XIL = "xil"  # X-in-the-loop (HiL, SiL, масштабные модели)
    VIRTUAL = "virtual"  # Полностью виртуальная симуляция


@dataclass
class CategoryProfile:
    # Дата-класс с типичным профилем тестовых атрибутов категории.
    # typical_levels - наибольший уровень, который категория обычно обеспечивает.

    category: EnvironmentCategory  # Категория из перечисления
    name: str  # Название для отчётов
    description: str  # Краткая характеристика
    emoji: str  # Эмодзи для визуального представления
    typical_levels: Dict[str, int]  # Атрибут -> типичный уровень 1..3


# Словарь, сопоставляющий каждую категорию с её типичным профилем.
# Используется для предупреждений о завышенных заявленных возможностях.
PROFILES: Dict[EnvironmentCategory, CategoryProfile] = {

    EnvironmentCategory.FIELD: CategoryProfile(
        category=EnvironmentCategory.FIELD,
        name="Дорожные испытания",
        description="Реальная среда и реальный автомобиль, опасности почти не контролируются",
        emoji="🛣️",
        typical_levels={
            "safety_hazard_mitigation": 1,
            "test_complexity": 1,
            "test_environment_fidelity": 3,
            "sut_fidelity": 3,
        }
    ),

    EnvironmentCategory.TRACK: CategoryProfile(
        category=EnvironmentCategory.TRACK,
        name="Полигон",
        description="Высокая достоверность среды и объекта, сложность сценариев ограничена",
        emoji="🏁",
        typical_levels={
            "safety_hazard_mitigation": 1,
            "test_complexity": 1,
            "test_environment_fidelity": 3,
            "sut_fidelity": 3,
        }
    ),

    EnvironmentCategory.XIL: CategoryProfile(
        category=EnvironmentCategory.XIL,
        name="XiL-стенд",
        description="Реальное оборудование объекта в контуре с моделью среды",
        emoji="🔌",
        typical_levels={
            "safety_hazard_mitigation": 3,
            "test_complexity": 2,
            "test_environment_fidelity": 1,
            "sut_fidelity": 3,
        }
    ),

    EnvironmentCategory.VIRTUAL: CategoryProfile(
        category=EnvironmentCategory.VIRTUAL,
        name="Виртуальная среда",
        description="Полная симуляция: безопасно и гибко, модели абстрагированы",
        emoji="💻",
        typical_levels={
            "safety_hazard_mitigation": 3,
            "test_complexity": 3,
            "test_environment_fidelity": 1,
            "sut_fidelity": 1,
        }
    ),
}


def profile_warnings(doc) -> List[str]:
    # Проверка заявленных уровней атрибутов против типичного профиля категории.
    # Выражения не проверяются: их значение зависит от требования.
    #
    # Args:
    #     doc: Документ-возможность (OddDocument) с заполненным полем category
    #
    # Returns:
    #     Список текстов предупреждений (пустой, если категория не указана)

    if not doc.category:
        return []
    try:
        profile = PROFILES[EnvironmentCategory(doc.category)]
    except ValueError:
        return [f"неизвестная категория окружения {doc.category!r}"]

    warnings = []
    attributes = doc.attributes
    for name, typical in profile.typical_levels.items():
        level = getattr(attributes, name)
        if isinstance(level, int) and level > typical:
            warnings.append(f"{name} = {level} выше типичного уровня {typical} "
                            f"для категории {profile.name} {profile.emoji}")

    if warnings:
        logger.warning(f"⚠️ {doc.id}: {len(warnings)} атрибут(ов) выше профиля категории {profile.category.value}")
    return warnings
