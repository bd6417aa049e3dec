from typing import Any, Dict, Optional

from pydantic import BaseModel


class TraceRecord(BaseModel):
    """One line of the structured event trace.

    Attributes:
    ----------
    - time (float): protocol clock in seconds
    - actor (str): "sender" or "receiver"
    - event (str): event name, e.g. packet_sent or block_decoded
    - path_id (Optional[int]): path the event belongs to, if any
    - values (Dict[str, Any]): event specific values
    """

    time: float
    actor: str
    event: str
    path_id: Optional[int] = None
    values: Dict[str, Any] = {}
