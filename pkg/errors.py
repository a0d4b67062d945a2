from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ParseDiagnostic:
    # Диагностика разбора с позицией в исходном тексте (строка и столбец с 1)

    severity: Severity
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity.value}: {self.message}"


class OddError(Exception):
    # Базовое исключение для всех ошибок работы с ODD.
    # path - путь листа, к которому относится ошибка (если известен)

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.path = path

    def at(self, path: str) -> "OddError":
        # Привязываем ошибку к листу, если путь ещё не указан
        if self.path is None:
            self.path = path
        return self

    def __str__(self) -> str:
        if self.path:
            return f"{self.path}: {self.message}"
        return self.message


class PathCollision(OddError):
    # Добавляемый узел конфликтует с уже существующим узлом таксономии
    pass


class UnknownParent(OddError):
    # Родительский путь добавляемого узла отсутствует в таксономии
    pass


class UnknownPath(OddError):
    # Путь не назначен в документе или отсутствует в таксономии
    pass


class UnboundReference(OddError):
    # Ссылка req:<path> указывает на лист, не назначенный в требовании
    pass


class LeafTypeError(OddError, TypeError):
    # Несовместимые виды значений (операнды выражения или пара требование/возможность)
    pass


class DuplicateId(OddError):
    # Повторяющийся идентификатор тест-кейса или окружения
    pass


class TaxonomyMismatch(OddError):
    # Таксономии документов не связаны отношением расширения
    pass


class ConcretizationError(OddError):
    # Результат конкретизации возможности не прошёл валидацию

    def __init__(self, message: str, violations: Sequence = (), path: Optional[str] = None):
        super().__init__(message, path)
        self.violations = list(violations)


class AllocationError(OddError):
    # Ошибка сравнения конкретной пары (тест-кейс, окружение)

    def __init__(self, test_case_id: str, environment_id: str, cause: Exception):
        super().__init__(f"{test_case_id} x {environment_id}: {cause}")
        self.test_case_id = test_case_id
        self.environment_id = environment_id
        self.cause = cause


class ParseError(OddError):
    # Ошибка разбора исходного текста; diagnostics - список ParseDiagnostic

    def __init__(self, diagnostics: List, origin: Optional[str] = None):
        first = diagnostics[0].message if diagnostics else "ошибка разбора"
        super().__init__(first)
        self.diagnostics = list(diagnostics)
        self.origin = origin
