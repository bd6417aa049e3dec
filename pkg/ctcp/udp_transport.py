""" CTCP over UDP.

DESCRIPTION
    One UDP socket per path. Each socket feeds its datagrams into one
    asyncio queue, and a single task pulls from the queue and drives the
    protocol core through the endpoint adapters, so the core is never
    entered concurrently. The protocol clock is the event loop's
    monotonic clock.

    The receiver opens the connection: it sends a SYN on every path and
    waits for the SYNACKs. The sender listens; it learns the receiver's
    address on each path from the SYN that arrives there and starts
    sending once every path has been opened.

EXAMPLE
    bindings = [PathBinding(path_id=0, local_address=("0.0.0.0", 9599))]
    async with await open_connection(
        "sender", bindings, params, stream_length=len(data)
    ) as connection:
        report = await connection.send_stream(data)
"""
import asyncio
import logging
from types import TracebackType
from typing import Dict, List, Optional, Tuple, Type

from pydantic import BaseModel, Field

from ctcp.endpoint import (
    Outbound,
    ReceiverEndpoint,
    SenderEndpoint,
    accept_synack,
    answer_syn,
    make_syn,
)
from ctcp.exceptions import (
    ConnectionClosedException,
    ContractViolationException,
    HandshakeTimeoutException,
    WireException,
)
from ctcp.models.message import DataPacket, Handshake, Message, MessageType
from ctcp.models.parameters import CtcpParameters
from ctcp.models.report import ConnectionReport
from ctcp.receiver import ReceiverState
from ctcp.sender import SenderState
from ctcp.trace import TraceRecorder
from ctcp.wire import deserialize, serialize

logger = logging.getLogger("ctcp.udp")

DEFAULT_PORT = 9599
DEFAULT_HANDSHAKE_TIMEOUT = 1.0
DEFAULT_HANDSHAKE_RETRIES = 5
DEFAULT_ACCEPT_TIMEOUT = 60.0
DEFAULT_IDLE_TIMEOUT = 30.0
DEFAULT_TICK_INTERVAL = 0.010

Address = Tuple[str, int]


class PathBinding(BaseModel):
    """Local socket of one path and, on the receiver, the sender's address.

    Attributes:
    ----------
    - path_id (int): id of the path within the connection
    - local_address (Tuple[str, int]): address the socket binds to
    - remote_address (Optional[Tuple[str, int]]): peer address. The
        receiver needs it; the sender learns it from the SYN.
    """

    path_id: int = Field(ge=0, le=0xFF)
    local_address: Address
    remote_address: Optional[Address] = None


def parse_address(text: str, default_host: str = "0.0.0.0") -> Address:
    """Parse "host:port", "host" or ":port" """
    host, separator, port = text.rpartition(":")
    if not separator:
        return (text or default_host, DEFAULT_PORT)
    return (host or default_host, int(port))


def parse_path_spec(text: str, path_id: int) -> PathBinding:
    """
    Parse a --path value "LOCAL[=REMOTE]".

    Raises:
    ------
    - ValueError: if a port is not a number
    """
    local, _, remote = text.partition("=")
    return PathBinding(
        path_id=path_id,
        local_address=parse_address(local),
        remote_address=parse_address(remote, "127.0.0.1") if remote else None,
    )


class _PathProtocol(asyncio.DatagramProtocol):
    """Feeds the datagrams of one socket into the connection queue"""

    def __init__(
        self, path_id: int, queue: "asyncio.Queue[Tuple[int, bytes, Address]]"
    ):
        self.path_id = path_id
        self.queue = queue
        self.transport: Optional[asyncio.DatagramTransport] = None

    def connection_made(self, transport: asyncio.BaseTransport) -> None:
        self.transport = transport  # type: ignore[assignment]

    def datagram_received(self, data: bytes, addr: Address) -> None:
        self.queue.put_nowait((self.path_id, data, addr))

    def error_received(self, exc: Exception) -> None:
        logger.debug("Path %d: socket error %s", self.path_id, exc)


class CtcpConnection:
    """
    A CTCP connection over one or more UDP sockets.

    Args:
    ----
    - role (str): "sender" or "receiver"
    - bindings (List[PathBinding]): one binding per path
    - params (CtcpParameters): local parameters; the receiver proposes
        them in its SYN and adopts the sender's answer
    - stream_length (Optional[int]): bytes the sender will transfer
    - trace (Optional[TraceRecorder]): event trace of the core
    - handshake_timeout (float): seconds before a SYN is repeated
    - handshake_retries (int): SYN repetitions before giving up
    - accept_timeout (float): seconds the sender waits for the SYNs
    - idle_timeout (float): seconds without any datagram after which an
        open connection is given up
    - tick_interval (float): period of the timeout checks
    """

    def __init__(
        self,
        role: str,
        bindings: List[PathBinding],
        params: CtcpParameters,
        stream_length: Optional[int] = None,
        trace: Optional[TraceRecorder] = None,
        handshake_timeout: float = DEFAULT_HANDSHAKE_TIMEOUT,
        handshake_retries: int = DEFAULT_HANDSHAKE_RETRIES,
        accept_timeout: float = DEFAULT_ACCEPT_TIMEOUT,
        idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
        tick_interval: float = DEFAULT_TICK_INTERVAL,
    ):
        if role not in ("sender", "receiver"):
            raise ContractViolationException(f"unknown role '{role}'")
        if not bindings:
            raise ContractViolationException("a connection needs at least one path")
        if len({b.path_id for b in bindings}) != len(bindings):
            raise ContractViolationException("path ids must be unique")
        if role == "sender" and stream_length is None:
            raise ContractViolationException("the sender needs the stream length")
        if role == "receiver" and any(b.remote_address is None for b in bindings):
            raise ContractViolationException("the receiver needs remote addresses")

        self.role = role
        self.bindings = sorted(bindings, key=lambda b: b.path_id)
        self.params = params
        self.stream_length = stream_length
        self.trace = trace
        self.handshake_timeout = handshake_timeout
        self.handshake_retries = handshake_retries
        self.accept_timeout = accept_timeout
        self.idle_timeout = idle_timeout
        self.tick_interval = tick_interval

        self._queue: "asyncio.Queue[Tuple[int, bytes, Address]]" = asyncio.Queue()
        self._protocols: Dict[int, _PathProtocol] = {}
        self._remotes: Dict[int, Address] = {
            b.path_id: b.remote_address for b in self.bindings if b.remote_address
        }
        # core path index <-> binding path id
        self._index = {b.path_id: i for i, b in enumerate(self.bindings)}
        self._origin = 0.0
        self.parse_errors = 0
        self._established = False

    # ------------------------------------------------------------------
    # sockets

    async def bind(self) -> None:
        loop = asyncio.get_running_loop()
        for binding in self.bindings:
            _, protocol = await loop.create_datagram_endpoint(
                lambda b=binding: _PathProtocol(b.path_id, self._queue),
                local_addr=binding.local_address,
            )
            self._protocols[binding.path_id] = protocol
            logger.debug(
                "Path %d bound to %s", binding.path_id, self.local_addresses[-1]
            )

    @property
    def local_addresses(self) -> List[Address]:
        """Addresses the sockets are bound to, in path order"""
        addresses = []
        for protocol in self._protocols.values():
            if protocol.transport is not None:
                addresses.append(protocol.transport.get_extra_info("sockname")[:2])
        return addresses

    def close(self) -> None:
        for protocol in self._protocols.values():
            if protocol.transport is not None:
                protocol.transport.close()
        self._protocols.clear()

    async def __aenter__(self) -> "CtcpConnection":
        if not self._protocols:
            await self.bind()
        return self

    async def __aexit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_value: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> None:
        self.close()

    def _now(self) -> float:
        return asyncio.get_running_loop().time() - self._origin

    def _send(self, binding_id: int, msg: Message) -> None:
        protocol = self._protocols.get(binding_id)
        remote = self._remotes.get(binding_id)
        if protocol is None or protocol.transport is None or remote is None:
            return
        protocol.transport.sendto(serialize(msg), remote)

    def _send_outbound(self, outbound: List[Outbound]) -> None:
        for core_path, msg in outbound:
            binding_id = self.bindings[core_path].path_id
            if msg.path_id != binding_id:
                msg = msg.model_copy(update={"path_id": binding_id})
            self._send(binding_id, msg)

    async def _next(self, timeout: float) -> Optional[Tuple[int, Message, Address]]:
        """Next parsed datagram, None on timeout"""
        loop = asyncio.get_running_loop()
        deadline = loop.time() + timeout
        while True:
            remaining = deadline - loop.time()
            if remaining <= 0:
                return None
            try:
                binding_id, data, addr = self._queue.get_nowait()
            except asyncio.QueueEmpty:
                try:
                    binding_id, data, addr = await asyncio.wait_for(
                        self._queue.get(), timeout=remaining
                    )
                except asyncio.TimeoutError:
                    return None
            try:
                msg = deserialize(data, self.params.blksize)
            except WireException as exception:
                self.parse_errors += 1
                logger.debug("Dropping datagram from %s: %s", addr, exception)
                continue
            return binding_id, msg, addr

    def _core_message(self, binding_id: int, msg: Message) -> Message:
        # the cores count paths from 0 in binding order
        index = self._index[binding_id]
        if msg.path_id != index and not isinstance(msg, Handshake):
            msg = msg.model_copy(update={"path_id": index})
        return msg

    # ------------------------------------------------------------------
    # handshake

    async def handshake(self) -> None:
        """
        Open the connection.

        Raises:
        ------
        - HandshakeTimeoutException: if the peer does not answer
        """
        if self.role == "receiver":
            await self._connect()
        else:
            await self._accept()
        self._established = True

    async def _connect(self) -> None:
        pending = {b.path_id for b in self.bindings}
        for attempt in range(self.handshake_retries + 1):
            for binding_id in pending:
                self._send(binding_id, make_syn(self.params, binding_id))
            if attempt:
                logger.warning("Repeating SYN (attempt %d)", attempt + 1)

            loop = asyncio.get_running_loop()
            deadline = loop.time() + self.handshake_timeout
            while pending and loop.time() < deadline:
                item = await self._next(deadline - loop.time())
                if item is None:
                    break
                binding_id, msg, _ = item
                if isinstance(msg, Handshake) and msg.msg_type == MessageType.SYNACK:
                    if binding_id in pending:
                        pending.discard(binding_id)
                        self.params = accept_synack(msg, self.params)
                        self.stream_length = msg.stream_length
            if not pending:
                self._origin = asyncio.get_running_loop().time()
                logger.info(
                    "Connected on %d path(s), stream of %d bytes",
                    len(self.bindings),
                    self.stream_length,
                )
                return

        raise HandshakeTimeoutException(
            f"no SYNACK after {self.handshake_retries + 1} attempts"
        )

    async def _accept(self) -> None:
        pending = {b.path_id for b in self.bindings}
        negotiated: Optional[CtcpParameters] = None
        loop = asyncio.get_running_loop()
        deadline = loop.time() + self.accept_timeout
        while pending:
            item = await self._next(deadline - loop.time())
            if item is None:
                raise HandshakeTimeoutException(
                    f"no SYN within {self.accept_timeout:.0f}s"
                )
            binding_id, msg, addr = item
            if not (isinstance(msg, Handshake) and msg.msg_type == MessageType.SYN):
                continue
            if negotiated is None:
                # the first SYN starts the protocol clock
                self._origin = loop.time()
                negotiated, _ = answer_syn(msg, self.params, self.stream_length or 0)
            self._remotes[binding_id] = addr
            self._answer_syn(binding_id, msg)
            pending.discard(binding_id)

        self.params = negotiated
        logger.info("Accepted connection on %d path(s)", len(self.bindings))

    def _answer_syn(self, binding_id: int, syn: Handshake) -> None:
        _, synack = answer_syn(syn, self.params, self.stream_length or 0)
        self._send(binding_id, synack.model_copy(update={"path_id": binding_id}))

    # ------------------------------------------------------------------
    # data

    async def send_stream(self, data: bytes) -> ConnectionReport:
        """
        Transfer `data` and run the close exchange.

        Raises:
        ------
        - ContractViolationException: if called on a receiver or with
            a stream of another length than announced
        - ConnectionClosedException: if the receiver falls silent
        """
        if self.role != "sender":
            raise ContractViolationException("send_stream() needs the sender role")
        if not self._established:
            await self.handshake()

        state = SenderState(
            self.params,
            self.stream_length,
            num_paths=len(self.bindings),
            now=self._now(),
            trace=self.trace,
        )
        state.push_stream(data)
        state.close()
        endpoint = SenderEndpoint(state)
        self._send_outbound(endpoint.poll(self._now()))

        next_tick = self._now() + self.tick_interval
        last_heard = self._now()
        while not endpoint.is_complete:
            item = await self._next(max(0.0, next_tick - self._now()))
            now = self._now()
            if item is not None:
                last_heard = now
                binding_id, msg, _ = item
                if isinstance(msg, Handshake):
                    if msg.msg_type == MessageType.SYN:
                        self._answer_syn(binding_id, msg)
                else:
                    self._send_outbound(
                        endpoint.on_message(
                            self._index[binding_id],
                            self._core_message(binding_id, msg),
                            now,
                        )
                    )
            if now >= next_tick:
                self._send_outbound(endpoint.on_tick(now))
                next_tick = now + self.tick_interval
            if now - last_heard > self.idle_timeout:
                raise ConnectionClosedException(
                    f"receiver silent for {self.idle_timeout:.0f}s"
                )

        duration = self._now()
        await self._close_as_sender()
        return ConnectionReport(
            role="sender",
            stream_length=len(data),
            duration=duration,
            goodput_mbps=len(data) * 8 / duration / 1e6 if duration > 0 else 0.0,
            packets_per_path=[path.packets_sent for path in state.paths],
            parse_errors=self.parse_errors,
        )

    async def _close_as_sender(self) -> None:
        fin = Handshake(
            msg_type=MessageType.FIN,
            blksize=self.params.blksize,
            numblks=self.params.numblks,
            payload_size=self.params.payload_size,
            stream_length=self.stream_length or 0,
        )
        binding_id = self.bindings[0].path_id
        for _ in range(self.handshake_retries + 1):
            self._send(binding_id, fin)
            loop = asyncio.get_running_loop()
            deadline = loop.time() + self.handshake_timeout
            while loop.time() < deadline:
                item = await self._next(deadline - loop.time())
                if item is None:
                    break
                _, msg, _ = item
                if isinstance(msg, Handshake) and msg.msg_type == MessageType.FINACK:
                    self._send(
                        binding_id, msg.model_copy(update={"path_id": binding_id})
                    )
                    logger.info("Connection closed")
                    return
        logger.warning("No FINACK from the receiver, closing anyway")

    async def receive_stream(self) -> Tuple[bytes, ConnectionReport]:
        """
        Receive the whole stream and run the close exchange.

        Raises:
        ------
        - ContractViolationException: if called on a sender
        - ConnectionClosedException: if the sender falls silent
        """
        if self.role != "receiver":
            raise ContractViolationException("receive_stream() needs the receiver role")
        if not self._established:
            await self.handshake()

        state = ReceiverState(self.params, self.stream_length or 0, trace=self.trace)
        endpoint = ReceiverEndpoint(state)
        received = bytearray()
        per_path = [0] * len(self.bindings)

        while not endpoint.is_complete:
            item = await self._next(self.idle_timeout)
            if item is None:
                raise ConnectionClosedException(
                    f"sender silent for {self.idle_timeout:.0f}s"
                )
            binding_id, msg, _ = item
            if isinstance(msg, DataPacket):
                per_path[self._index[binding_id]] += 1
            self._send_outbound(
                endpoint.on_message(
                    self._index[binding_id],
                    self._core_message(binding_id, msg),
                    self._now(),
                )
            )
            received.extend(endpoint.read_delivered())

        duration = self._now()
        await self._close_as_receiver(endpoint)
        report = ConnectionReport(
            role="receiver",
            stream_length=len(received),
            duration=duration,
            goodput_mbps=len(received) * 8 / duration / 1e6 if duration > 0 else 0.0,
            packets_per_path=per_path,
            parse_errors=self.parse_errors,
        )
        return bytes(received), report

    async def _close_as_receiver(self, endpoint: ReceiverEndpoint) -> None:
        """Keep acknowledging until the sender's FIN exchange is over"""
        linger = self.handshake_timeout * (self.handshake_retries + 1)
        loop = asyncio.get_running_loop()
        deadline = loop.time() + linger
        while loop.time() < deadline:
            item = await self._next(deadline - loop.time())
            if item is None:
                break
            binding_id, msg, _ = item
            if isinstance(msg, Handshake):
                if msg.msg_type == MessageType.FIN:
                    self._send(
                        binding_id,
                        msg.model_copy(
                            update={
                                "msg_type": MessageType.FINACK,
                                "path_id": binding_id,
                            }
                        ),
                    )
                elif msg.msg_type == MessageType.FINACK:
                    logger.info("Connection closed")
                    return
                continue
            self._send_outbound(
                endpoint.on_message(
                    self._index[binding_id],
                    self._core_message(binding_id, msg),
                    self._now(),
                )
            )
        logger.warning("Close exchange incomplete, closing anyway")


async def open_connection(
    role: str,
    bindings: List[PathBinding],
    params: CtcpParameters,
    stream_length: Optional[int] = None,
    **options,
) -> CtcpConnection:
    """
    Bind the sockets and run the handshake.

    Args:
    ----
    - role (str): "sender" or "receiver"
    - bindings (List[PathBinding]): one binding per path
    - params (CtcpParameters): local parameters
    - stream_length (Optional[int]): bytes the sender will transfer
    - options: further keyword arguments of CtcpConnection

    Raises:
    ------
    - HandshakeTimeoutException: if the peer does not answer in time

    Returns:
    -------
    - CtcpConnection: established connection
    """
    connection = CtcpConnection(role, bindings, params, stream_length, **options)
    await connection.bind()
    try:
        await connection.handshake()
    except BaseException:
        connection.close()
        raise
    return connection
