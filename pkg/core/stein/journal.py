"""
Журнал проверок в памяти

Хранит записи проверок тождества Штейна, несмещённости и выбора порогов
на время работы процесса.
"""

from typing import Optional, Dict, Any, List
from datetime import datetime


class VerificationJournal:
    """
    Журнал проверок (не сохраняется между запусками)

    Используется для:
    - Отчёта команды verify
    - Статистики SureSystem
    - Отладки численных путей
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Args:
            config: {'max_entries': предельный размер журнала}
        """
        self.config = config or {}
        self._entries: List[Dict[str, Any]] = []
        self.max_entries = self.config.get('max_entries', 10000)

    def log_check(self, action: str, model_id: str = "", success: bool = True,
                  details: Optional[Dict[str, Any]] = None):
        """
        Запись проверки

        Args:
            action: Вид проверки ('stein_quadrature', 'stein_mc', 'select_threshold', ...)
            model_id: Идентификатор закона
            success: Пройдена ли проверка
            details: Числа проверки (lhs, rhs, se, tolerance, ...)
        """
        entry = {
            'timestamp': datetime.now().isoformat(),
            'action': action,
            'model_id': model_id,
            'success': bool(success),
            'details': details or {},
        }
        self._entries.append(entry)

        if len(self._entries) > self.max_entries:
            self._entries = self._entries[-self.max_entries:]

    def get_entries(self, filters: Optional[Dict[str, Any]] = None,
                    limit: int = 1000, offset: int = 0) -> List[Dict[str, Any]]:
        """
        Записи с фильтрацией и пагинацией

        Args:
            filters: action, model_id, success, date_from, date_to
            limit: Максимальное количество записей
            offset: Смещение
        """
        entries = self._entries

        if filters:
            for key, value in filters.items():
                if key in ('action', 'model_id', 'success'):
                    entries = [e for e in entries if e[key] == value]
                elif key == 'date_from':
                    date_from = datetime.fromisoformat(value)
                    entries = [e for e in entries
                               if datetime.fromisoformat(e['timestamp']) >= date_from]
                elif key == 'date_to':
                    date_to = datetime.fromisoformat(value)
                    entries = [e for e in entries
                               if datetime.fromisoformat(e['timestamp']) <= date_to]

        return entries[offset:offset + limit]

    def summary(self) -> Dict[str, Any]:
        """Итог по видам проверок"""
        by_action: Dict[str, Dict[str, int]] = {}
        for entry in self._entries:
            counts = by_action.setdefault(entry['action'], {'passed': 0, 'failed': 0})
            counts['passed' if entry['success'] else 'failed'] += 1
        failed = sum(c['failed'] for c in by_action.values())
        return {
            'total': len(self._entries),
            'failed': failed,
            'all_passed': failed == 0,
            'by_action': by_action,
            'max_entries': self.max_entries,
        }

    def clear(self):
        self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)
