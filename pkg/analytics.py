import logging
from io import BytesIO
from typing import Optional

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from allocation_service import AllocationReport

# Настройка логгера для текущего модуля
logger = logging.getLogger(__name__)


class Analytics:
    # Класс для визуализации отчётов о распределении тест-кейсов

    @staticmethod
    def generate_heatmap(report: AllocationReport) -> Optional[BytesIO]:
        # Тепловая карта запаса по атрибутам для матрицы (тест-кейс, окружение).
        # Недопустимые пары остаются пустыми и подписываются "✘".
        #
        # Args:
        #     report: Отчёт о распределении
        #
        # Returns:
        #     BytesIO с PNG изображением или None, если матрица пуста

        if not report.matrix:
            return None

        cases, envs = report.test_case_ids, report.environment_ids
        values = np.full((len(cases), len(envs)), np.nan)
        labels = np.full((len(cases), len(envs)), '✘', dtype=object)
        for i, case_id in enumerate(cases):
            for j, env_id in enumerate(envs):
                slack = report.slack(case_id, env_id)
                if slack is not None:
                    values[i, j] = slack
                    labels[i, j] = str(slack)

        df = pd.DataFrame(values, index=cases, columns=envs)
        vmax = float(np.nanmax(values)) if not np.all(np.isnan(values)) else 0.0

        fig, ax = plt.subplots(figsize=(max(4, 1.5 * len(envs) + 2), max(3, 0.6 * len(cases) + 2)))
        sns.heatmap(df, annot=labels, fmt='', cmap='YlGn_r', vmin=0, vmax=max(vmax, 1.0),
                    cbar_kws={'label': 'Запас по атрибутам'}, linewidths=0.5, linecolor='#DDDDDD', ax=ax)
        ax.set_facecolor('#F5B7B1')
        ax.set_xlabel('Окружение', fontsize=11)
        ax.set_ylabel('Тест-кейс', fontsize=11)
        ax.set_title('Допустимость и запас окружений', fontsize=12, fontweight='bold')
        plt.tight_layout()

        buf = BytesIO()
        plt.savefig(buf, format='png', dpi=100)
        buf.seek(0)
        plt.close(fig)

        return buf
