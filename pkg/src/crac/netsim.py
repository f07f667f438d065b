"""Two-endpoint run of the protocol over TCP.

Alice listens, Bob connects. Frames are a 4-byte big-endian length followed
by a UTF-8 JSON object ``{"kind": ..., "payload": {...}}``.

The shared singlet cannot travel over a classical link, so Alice ships the
collapsed direction of Bob's qubit on a separate ``QuantumCollapse`` fabric
message. Bob's apparatus only ever turns that message into a qubit state;
his guesses read beta from the audited ``ClassicalBit`` channel alone.
"""

from __future__ import annotations

import json
import logging
import socket
import struct
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .geometry import DatabaseBits
from .infotheory import JointDistribution
from .protocol import (
    ChannelStats,
    ProtocolConfig,
    TrialArrays,
    TrialRecord,
    alice_trial,
    bob_amplitudes,
    empirical_stats,
    guess,
    shard_sizes,
    shard_streams,
)

log = logging.getLogger(__name__)

KINDS = ("Hello", "TrialStart", "QuantumCollapse", "ClassicalBit", "Guess", "Stats", "Bye")
HEADER = struct.Struct(">I")
MAX_FRAME = 1 << 20


class ProtocolError(RuntimeError):
    """Malformed or unexpected frame."""


class TransportError(RuntimeError):
    """Connection lost or unreachable."""


class HandshakeRefused(RuntimeError):
    pass


def fmt_angle(x: float) -> str:
    return format(float(x), ".17g")


def encode_frame(kind: str, payload: dict) -> bytes:
    if kind not in KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    body = json.dumps({"kind": kind, "payload": payload}, separators=(",", ":")).encode("utf-8")
    return HEADER.pack(len(body)) + body


def decode_body(body: bytes) -> tuple[str, dict]:
    try:
        msg = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable frame: {exc}") from exc
    if not isinstance(msg, dict) or "kind" not in msg:
        raise ProtocolError("frame without kind tag")
    kind = msg["kind"]
    if kind not in KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    payload = msg.get("payload", {})
    if not isinstance(payload, dict):
        raise ProtocolError("payload must be an object")
    return kind, payload


@dataclass
class BitBudgetAudit:
    trials: int = 0
    classical_bits_observed: int = 0
    quantum_fabric_messages: int = 0

    @property
    def conforming(self) -> bool:
        return self.classical_bits_observed == self.trials


class Channel:
    """Framed, optionally transcribed, socket connection."""

    def __init__(self, sock: socket.socket, transcript=None, side: str = ""):
        if sock.family in (socket.AF_INET, socket.AF_INET6):
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.sock = sock
        self._buf = bytearray()
        self._transcript = transcript
        self._side = side
        self._pending: list[bytes] = []

    def _log(self, direction: str, kind: str, payload: dict) -> None:
        if self._transcript is not None:
            self._transcript.write(
                json.dumps({"side": self._side, "dir": direction, "kind": kind, "payload": payload},
                           separators=(",", ":")) + "\n"
            )

    def queue(self, kind: str, payload: dict) -> None:
        self._pending.append(encode_frame(kind, payload))
        self._log("tx", kind, payload)

    def flush(self) -> None:
        if self._pending:
            data = b"".join(self._pending)
            self._pending.clear()
            try:
                self.sock.sendall(data)
            except OSError as exc:
                raise TransportError(f"send failed: {exc}") from exc

    def send(self, kind: str, payload: dict) -> None:
        self.queue(kind, payload)
        self.flush()

    def _fill(self, n: int) -> None:
        while len(self._buf) < n:
            try:
                chunk = self.sock.recv(65536)
            except OSError as exc:
                raise TransportError(f"receive failed: {exc}") from exc
            if not chunk:
                raise TransportError("connection closed by peer")
            self._buf += chunk

    def recv(self) -> tuple[str, dict]:
        self._fill(HEADER.size)
        (length,) = HEADER.unpack_from(self._buf)
        if length > MAX_FRAME:
            raise ProtocolError(f"frame of {length} bytes exceeds limit")
        self._fill(HEADER.size + length)
        body = bytes(self._buf[HEADER.size:HEADER.size + length])
        del self._buf[:HEADER.size + length]
        kind, payload = decode_body(body)
        self._log("rx", kind, payload)
        return kind, payload

    def expect(self, *kinds: str) -> tuple[str, dict]:
        kind, payload = self.recv()
        if kind not in kinds:
            raise ProtocolError(f"expected {'/'.join(kinds)}, got {kind}")
        return kind, payload

    def drain_to_eof(self) -> int:
        """Read until the peer closes; returns the count of unread bytes."""
        extra = len(self._buf)
        try:
            while True:
                chunk = self.sock.recv(65536)
                if not chunk:
                    break
                extra += len(chunk)
        except OSError:
            pass
        return extra

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


def parse_address(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must be host:port, got {addr!r}")
    return host, int(port)


@dataclass
class AliceSummary:
    records: list[TrialRecord] = field(default_factory=list)
    stats: ChannelStats | None = None
    audit: BitBudgetAudit = field(default_factory=BitBudgetAudit)
    refused: bool = False
    unread_bytes: int = 0


def _stats_payload(stats: ChannelStats, audit: BitBudgetAudit) -> dict:
    return {"joint_a": stats.joint_a.table.tolist(), "joint_b": stats.joint_b.table.tolist(),
            "trials": stats.trials, "audit": asdict(audit)}


def serve_alice(
    cfg: ProtocolConfig,
    address: str = "127.0.0.1:0",
    *,
    ablate: bool = False,
    transcript=None,
    on_listening: Callable[[tuple[str, int]], None] | None = None,
    accept_timeout: float | None = 60.0,
) -> AliceSummary:
    """Listen for one Bob, run every trial, then exchange Stats and Bye."""
    host, port = parse_address(address)
    server = socket.create_server((host, port))
    server.settimeout(accept_timeout)
    if on_listening is not None:
        on_listening(server.getsockname()[:2])
    try:
        try:
            conn, _ = server.accept()
        except socket.timeout as exc:
            raise TransportError("no Bob connected") from exc
    finally:
        server.close()
    conn.settimeout(None)
    ch = Channel(conn, transcript, "alice")
    summary = AliceSummary()
    try:
        _, hello = ch.expect("Hello")
        if hello.get("config_hash") != cfg.config_hash():
            ch.send("Bye", {"reason": "config hash mismatch"})
            summary.refused = True
            return summary
        ch.send("Hello", {"config_hash": cfg.config_hash(), "trials": int(cfg.trials),
                          "classical_channel": not ablate})
        reps = cfg.representatives() if cfg.phi_mode == "fixed" else None
        arcs = cfg.partition.arcs()
        parts = []
        trial = 0
        audit = summary.audit
        for shard, n in enumerate(shard_sizes(int(cfg.trials), int(cfg.shards))):
            alice_rng, _ = shard_streams(cfg.seed, shard)
            cols = {k: [] for k in ("bits", "phi", "beta", "o_a", "o_b")}
            for _ in range(n):
                a = alice_trial(cfg, alice_rng.random(3), reps, arcs)
                ch.queue("TrialStart", {"trial": trial})
                ch.queue("QuantumCollapse", {"trial": trial, "phi": fmt_angle(a.phi),
                                             "branch": a.beta})
                audit.quantum_fabric_messages += 1
                if not ablate:
                    ch.queue("ClassicalBit", {"trial": trial, "bit": a.beta})
                    audit.classical_bits_observed += 1
                ch.flush()
                _, g = ch.expect("Guess")
                if g.get("trial") != trial:
                    raise ProtocolError(f"guess for trial {g.get('trial')} while on {trial}")
                cols["bits"].append(tuple(a.bits))
                cols["phi"].append(a.phi)
                cols["beta"].append(a.beta)
                cols["o_a"].append(int(g["o_a"]))
                cols["o_b"].append(int(g["o_b"]))
                trial += 1
                audit.trials += 1
            parts.append(TrialArrays(
                np.array(cols["bits"], dtype=np.int8).reshape(-1, 2),
                np.array(cols["phi"], dtype=float),
                np.array(cols["beta"], dtype=np.int8),
                np.array(cols["o_a"], dtype=np.int8),
                np.array(cols["o_b"], dtype=np.int8),
            ))
        arr = TrialArrays.concat(parts)
        if not ablate:
            summary.records = arr.records()
        else:
            # Bob guessed without beta; keep the transcript as he decoded it
            summary.records = [r._replace(guess_a=guess(r.outcome_a, 0), guess_b=guess(r.outcome_b, 0))
                               for r in arr.records()]
            arr = TrialArrays(arr.bits, arr.phi, np.zeros_like(arr.beta), arr.o_a, arr.o_b)
        stats = empirical_stats(arr)
        stats.classical_bits_used = audit.classical_bits_observed
        summary.stats = stats
        ch.send("Stats", _stats_payload(stats, audit))
        ch.send("Bye", {})
        ch.expect("Bye")
        summary.unread_bytes = ch.drain_to_eof()
        return summary
    finally:
        ch.close()


@dataclass
class BobResult:
    stats: ChannelStats
    audit: BitBudgetAudit
    unread_bytes: int = 0


def _connect(address: str, timeout: float) -> socket.socket:
    host, port = parse_address(address)
    deadline = time.monotonic() + timeout
    while True:
        try:
            return socket.create_connection((host, port), timeout=5.0)
        except OSError as exc:
            if time.monotonic() > deadline:
                raise TransportError(f"cannot reach Alice at {address}: {exc}") from exc
            time.sleep(0.05)


def serve_bob(cfg: ProtocolConfig, address: str, *, transcript=None,
              connect_timeout: float = 10.0) -> BobResult:
    """Connect to Alice, decode every trial, return Alice's stats and Bob's audit."""
    sock = _connect(address, connect_timeout)
    sock.settimeout(None)
    ch = Channel(sock, transcript, "bob")
    audit = BitBudgetAudit()
    u_a, u_b = cfg.unitaries()
    theta_a, theta_b = cfg.axis_a.angle, cfg.axis_b.angle
    try:
        ch.send("Hello", {"config_hash": cfg.config_hash(), "role": "bob"})
        kind, hello = ch.expect("Hello", "Bye")
        if kind == "Bye":
            raise HandshakeRefused(hello.get("reason", "refused"))
        classical = bool(hello.get("classical_channel", True))
        trial = 0
        for shard, n in enumerate(shard_sizes(int(cfg.trials), int(cfg.shards))):
            _, bob_rng = shard_streams(cfg.seed, shard)
            for _ in range(n):
                _, start = ch.expect("TrialStart")
                if start.get("trial") != trial:
                    raise ProtocolError("trial numbering out of step")
                _, fabric = ch.expect("QuantumCollapse")
                audit.quantum_fabric_messages += 1
                qubit = bob_amplitudes(np.array([float(fabric["phi"])]),
                                       np.array([int(fabric["branch"])]))
                r = bob_rng.random(2)
                o_a, o_b = kernels.sample_outcomes(
                    u_a.entries, u_b.entries, qubit, theta_a, theta_b, r[:1], r[1:]
                )
                o_a, o_b = int(o_a[0]), int(o_b[0])
                beta = 0
                if classical:
                    _, cb = ch.expect("ClassicalBit")
                    beta = int(cb["bit"])
                    if beta not in (0, 1):
                        raise ProtocolError("classical bit must be 0 or 1")
                    audit.classical_bits_observed += 1
                ch.send("Guess", {"trial": trial, "o_a": o_a, "o_b": o_b,
                                  "g_a": guess(o_a, beta), "g_b": guess(o_b, beta)})
                trial += 1
                audit.trials += 1
        _, st = ch.expect("Stats")
        ch.expect("Bye")
        ch.send("Bye", {})
        try:
            sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        unread = ch.drain_to_eof()
        stats = ChannelStats(
            joint_a=JointDistribution(np.array(st["joint_a"])),
            joint_b=JointDistribution(np.array(st["joint_b"])),
            classical_bits_used=audit.classical_bits_observed,
            trials=int(st["trials"]),
        )
        return BobResult(stats, audit, unread)
    finally:
        ch.close()


def loopback(cfg: ProtocolConfig, *, ablate: bool = False, transcript=None):
    """Run both endpoints in this process (Alice on a thread)."""
    import threading

    ready: list = []
    started = threading.Event()
    box: dict = {}

    def alice():
        try:
            box["alice"] = serve_alice(
                cfg, "127.0.0.1:0", ablate=ablate, transcript=transcript,
                on_listening=lambda addr: (ready.append(addr), started.set()),
            )
        except BaseException as exc:  # surfaced in the caller
            box["error"] = exc
            started.set()

    t = threading.Thread(target=alice, daemon=True)
    t.start()
    started.wait(10)
    if "error" in box:
        raise box["error"]
    host, port = ready[0]
    bob = serve_bob(cfg, f"{host}:{port}", transcript=transcript)
    t.join(30)
    if "error" in box:
        raise box["error"]
    return box["alice"], bob
