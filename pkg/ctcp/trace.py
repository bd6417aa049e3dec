""" Line-delimited event trace shared by sender and receiver.

Records are kept as plain tuples while the connection runs and only
turned into TraceRecord models when they are written or inspected.
"""
from collections import deque
from pathlib import Path
from typing import Any, Deque, Iterator, List, Optional, Tuple, Union

from ctcp.models.trace import TraceRecord

_RawRecord = Tuple[float, str, str, Optional[int], dict]


class TraceRecorder:
    """Collects trace events.

    Args:
    ----
    - maxlen (Optional[int]): keep only the latest `maxlen` records. None
        keeps everything; the simulator uses a bounded recorder to attach
        the trace tail to stall diagnostics.
    """

    def __init__(self, maxlen: Optional[int] = None):
        self._records: Deque[_RawRecord] = deque(maxlen=maxlen)

    def emit(
        self,
        time: float,
        actor: str,
        event: str,
        path_id: Optional[int] = None,
        **values: Any,
    ) -> None:
        self._records.append((time, actor, event, path_id, values))

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> Iterator[TraceRecord]:
        for time, actor, event, path_id, values in self._records:
            yield TraceRecord(
                time=time, actor=actor, event=event, path_id=path_id, values=values
            )

    def lines(self) -> List[str]:
        return [record.model_dump_json() for record in self.records()]

    def tail(self, count: int) -> List[str]:
        return self.lines()[-count:]

    def write(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as file_handle:
            for line in self.lines():
                file_handle.write(line + "\n")
