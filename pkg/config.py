import os
from pathlib import Path

from dotenv import load_dotenv

# Загружаем переменные окружения из файла .env
load_dotenv()

# Каталог поставляемых таксономий (odd.yaml и расширение ext_odd.yaml)
SHIPPED_TAXONOMY_DIR = Path(__file__).resolve().parent / 'taxonomies'

# Дополнительный каталог с файлами таксономий
# Загружается после поставляемых, поэтому может расширять их
TAXONOMY_DIR = os.getenv('ODD_TAXONOMY_DIR')

# Формат отчётов по умолчанию: yaml или json
REPORT_FORMAT = os.getenv('ODD_REPORT_FORMAT', 'yaml').lower()

# Уровень логирования командной строки (DEBUG, INFO, WARNING, ...)
LOG_LEVEL = os.getenv('ODD_LOG_LEVEL', 'WARNING').upper()

# Число потоков для сравнения пар (тест-кейс, окружение) при распределении
# Значение 1 - последовательное вычисление
ALLOCATION_WORKERS = int(os.getenv('ODD_ALLOCATION_WORKERS', '1'))
