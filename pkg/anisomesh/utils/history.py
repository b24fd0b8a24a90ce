"""
History Manager - Ledger of completed adaptive runs.
"""

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from .logger import anisomesh_home, get_logger

logger = get_logger(__name__)

MAX_ENTRIES = 1000


class HistoryManager:
    """Run history management."""

    def __init__(self, home: Optional[Path] = None) -> None:
        self.history_file = (Path(home) if home is not None else anisomesh_home()) / "history.json"
        self.history: List[Dict[str, Any]] = self._load_history()

    def _load_history(self) -> List[Dict[str, Any]]:
        """Load history from file."""
        if self.history_file.exists():
            try:
                with open(self.history_file, "r") as f:
                    data = json.load(f)
                if isinstance(data, list):
                    return data
            except (OSError, json.JSONDecodeError) as e:
                logger.warning(f"Ignoring unreadable history {self.history_file}: {e}")
        return []

    def _save_history(self) -> None:
        self.history_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.history_file, "w") as f:
            json.dump(self.history, f, indent=2)

    def add_entry(
        self,
        command: str,
        example: str,
        metric: str,
        n_target: int,
        final: Optional[Dict[str, Any]] = None,
        output_dir: Optional[str] = None,
        status: str = "ok",
    ) -> Dict[str, Any]:
        """Append one run; ``final`` holds the last report row when there is one."""
        final = final or {}
        entry = {
            "timestamp": datetime.now().isoformat(timespec="seconds"),
            "command": command,
            "example": example,
            "metric": metric,
            "n_target": n_target,
            "nbt": final.get("nbt"),
            "h1_err": final.get("h1_err"),
            "h2_err": final.get("h2_err"),
            "output_dir": output_dir,
            "status": status,
        }
        self.history.append(entry)

        if len(self.history) > MAX_ENTRIES:
            self.history = self.history[-MAX_ENTRIES:]

        self._save_history()
        return entry

    def get_recent(self, count: int = 20) -> List[Dict[str, Any]]:
        """Get recent history entries."""
        return self.history[-count:] if count > 0 else []

    def search(self, query: str) -> List[Dict[str, Any]]:
        """Entries whose command, example or metric contains the query."""
        query_lower = query.lower()
        return [
            entry for entry in self.history
            if any(query_lower in str(entry.get(key, "")).lower() for key in ("command", "example", "metric"))
        ]

    def clear(self) -> None:
        self.history = []
        self._save_history()
