"""Deterministic two-party session harness with a framed wire format.

A protocol run is a sequence of messages between a client and a server
party object (the same objects apps.py drives in process).  The harness
pins down everything needed to make two runs comparable byte for byte:

* every message is serialized as canonical JSON (sorted keys, no
  insignificant whitespace) behind a 4-byte big-endian length prefix;
* party randomness comes from a labelled split of one session seed, so
  the in-process driver and the socket driver draw identical streams;
* the transcript records messages in delivery order, which both drivers
  reproduce exactly.

Sessions over a socket alternate turns.  A turn is zero or more frames
closed by a turn marker; the session ends when both sides send an empty
turn back to back.  One connection carries one session.
"""

from __future__ import annotations

import hashlib
import json
import socket
import struct
import uuid
from dataclasses import dataclass, field

import numpy as np

from . import apps

HARNESS_VERSION = 1
MAX_FRAME_BYTES = 16 * 1024 * 1024
ROLES = ("client", "server")

_LENGTH = struct.Struct(">I")
_TURN_END = _LENGTH.pack(0xFFFFFFFF)
_NAMESPACE = uuid.uuid5(uuid.NAMESPACE_URL, "ospsim-session")


class FrameError(ValueError):
    """A byte string that does not parse as exactly one well-formed frame."""


class SessionError(RuntimeError):
    """Local misuse of the harness (bad role, unknown protocol, and so on)."""


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError("payload value %r is not wire-serializable" % (value,))


def canonical_json(obj) -> bytes:
    """Serialize with sorted keys and no insignificant whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      default=_json_default).encode("utf-8")


# ------------------------------------------------------------------ messages


@dataclass
class Message:
    """One protocol message with its position in the session."""

    session: str
    seq: int
    role: str
    kind: str
    payload: object

    def to_dict(self) -> dict:
        return {"session": self.session, "seq": self.seq, "role": self.role,
                "kind": self.kind, "payload": self.payload}

    @classmethod
    def from_dict(cls, obj) -> "Message":
        if not isinstance(obj, dict):
            raise FrameError("frame body must be a JSON object")
        expected = {"session", "seq", "role", "kind", "payload"}
        if set(obj) != expected:
            raise FrameError("frame fields %s do not match %s"
                             % (sorted(obj), sorted(expected)))
        session, seq, role, kind = (obj["session"], obj["seq"], obj["role"],
                                    obj["kind"])
        if not isinstance(session, str):
            raise FrameError("session must be a string")
        if isinstance(seq, bool) or not isinstance(seq, int) or seq < 0:
            raise FrameError("seq must be a non-negative integer")
        if role not in ROLES:
            raise FrameError("role must be one of %s" % (ROLES,))
        if not isinstance(kind, str) or not kind:
            raise FrameError("kind must be a non-empty string")
        return cls(session, seq, role, kind, obj["payload"])


def frame_encode(message: Message) -> bytes:
    """Length-prefixed canonical encoding of one message."""
    body = canonical_json(message.to_dict())
    if len(body) > MAX_FRAME_BYTES:
        raise FrameError("frame body of %d bytes exceeds the %d byte cap"
                         % (len(body), MAX_FRAME_BYTES))
    return _LENGTH.pack(len(body)) + body


def frame_decode(data: bytes) -> Message:
    """Inverse of frame_encode; rejects anything but one exact frame."""
    if len(data) < _LENGTH.size:
        raise FrameError("frame shorter than its length prefix")
    (length,) = _LENGTH.unpack_from(data)
    if length > MAX_FRAME_BYTES:
        raise FrameError("declared frame length %d exceeds the cap" % length)
    body = data[_LENGTH.size:]
    if len(body) < length:
        raise FrameError("frame truncated: %d of %d body bytes"
                         % (len(body), length))
    if len(body) > length:
        raise FrameError("%d trailing bytes after the frame"
                         % (len(body) - length))
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError("frame body is not valid JSON: %s" % exc) from None
    return Message.from_dict(obj)


# --------------------------------------------------------------- transcripts


@dataclass
class Transcript:
    """One party's full record of a session."""

    protocol: str
    seed: int
    session: str
    role: str
    outcome: dict
    messages: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "seed": self.seed,
            "session": self.session,
            "role": self.role,
            "outcome": self.outcome,
            "messages": [m.to_dict() for m in self.messages],
        }

    def to_bytes(self) -> bytes:
        return canonical_json(self.to_json())

    def message_bytes(self) -> bytes:
        """Canonical bytes of the message list alone."""
        return canonical_json([m.to_dict() for m in self.messages])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Transcript":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        messages = [Message.from_dict(m) for m in obj["messages"]]
        return cls(obj["protocol"], int(obj["seed"]), obj["session"],
                   obj["role"], obj["outcome"], messages)


# ------------------------------------------------------------- seed handling


def derive_seed(seed: int, *labels) -> int:
    """Split one 64-bit seed into independent streams by label."""
    h = hashlib.sha256()
    h.update(b"ospsim-harness")
    h.update(struct.pack(">Q", int(seed) & 0xFFFFFFFFFFFFFFFF))
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")


def derive_rng(seed: int, *labels):
    return np.random.default_rng(derive_seed(seed, *labels))


def session_id(protocol: str, seed: int) -> str:
    """Deterministic session identifier shared by both endpoints."""
    return str(uuid.uuid5(_NAMESPACE, "%s/%d" % (protocol, int(seed))))


# ---------------------------------------------------------- party factories


def _poq_factory(role, seed, config):
    rng = derive_rng(seed, "poq", role)
    rounds = int(config.get("rounds", 8))
    n = int(config.get("n", 3))
    if role == "client":
        return apps.PoqVerifierParty(rounds, rng, n)
    return apps.PoqProverParty(rng)


def _ot_factory(role, seed, config):
    rng = derive_rng(seed, "ot", role)
    lam = int(config.get("lam", 8))
    variant = str(config.get("variant", "search"))
    if role == "client":
        b = config.get("b", 0)
        cheat = config.get("cheat")
        return apps.OtReceiverParty(b, lam, variant, rng, cheat)
    return apps.OtSenderParty(lam, variant, rng)


PROTOCOLS = {"poq": _poq_factory, "ot": _ot_factory}


def make_party(protocol: str, role: str, seed: int, config=None):
    if protocol not in PROTOCOLS:
        raise SessionError("unknown protocol %r" % protocol)
    if role not in ROLES:
        raise SessionError("unknown role %r" % role)
    return PROTOCOLS[protocol](role, seed, dict(config or {}))


# ---------------------------------------------------------- in-process runs


class _Sequencer:
    """Stamps outgoing payload dicts into Messages with per-role counters."""

    def __init__(self, session):
        self.session = session
        self.counters = {"client": 0, "server": 0}

    def stamp(self, role, raw) -> Message:
        msg = Message(self.session, self.counters[role], role,
                      raw["kind"], raw["payload"])
        self.counters[role] += 1
        return msg

    def expect(self, msg: Message, role: str):
        """Validate an incoming message and advance the peer counter."""
        if msg.session != self.session:
            raise FrameError("session id %r does not match %r"
                             % (msg.session, self.session))
        if msg.role != role:
            raise FrameError("message role %r, expected %r" % (msg.role, role))
        if msg.seq != self.counters[role]:
            raise FrameError("seq %d out of order, expected %d"
                             % (msg.seq, self.counters[role]))
        self.counters[role] += 1


def run_local(protocol: str, seed: int, config=None) -> dict:
    """Drive one session fully in process; returns a transcript per role.

    Both transcripts carry the same message list; each outcome holds the
    owning party's result.  Message order matches the socket driver: the
    delivery queue is first-in first-out, so a multi-message reply is
    recorded before any responses to it.
    """
    config = dict(config or {})
    client = make_party(protocol, "client", seed, config)
    server = make_party(protocol, "server", seed, config)
    session = session_id(protocol, seed)
    seq = _Sequencer(session)
    messages = []
    queue = [(client, None)]
    while queue:
        party, incoming = queue.pop(0)
        replies = party.on_message(incoming)
        peer = server if party is client else client
        for raw in replies:
            messages.append(seq.stamp(party.role, raw))
            queue.append((peer, raw))
    out = {}
    for role, party in (("client", client), ("server", server)):
        outcome = {"status": "complete", "result": party.result}
        out[role] = Transcript(protocol, int(seed), session, role,
                               outcome, list(messages))
    return out


# -------------------------------------------------------------- socket runs


def _read_exact(fh, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining:
        piece = fh.read(remaining)
        if not piece:
            raise ConnectionError("peer closed the connection mid-frame")
        chunks.append(piece)
        remaining -= len(piece)
    return b"".join(chunks)


def _send_turn(fh, batch):
    for msg in batch:
        fh.write(frame_encode(msg))
    fh.write(_TURN_END)
    fh.flush()


def _recv_turn(fh):
    """Read frames up to the turn marker; returns decoded Messages."""
    received = []
    while True:
        header = _read_exact(fh, _LENGTH.size)
        if header == _TURN_END:
            return received
        (length,) = _LENGTH.unpack(header)
        if length > MAX_FRAME_BYTES:
            raise FrameError("declared frame length %d exceeds the cap"
                             % length)
        body = _read_exact(fh, length)
        received.append(frame_decode(header + body))


def _hello(protocol, session, seed) -> dict:
    return {"harness": HARNESS_VERSION, "protocol": protocol,
            "session": session, "seed": int(seed)}


def _check_hello(obj, protocol, session, seed):
    if not isinstance(obj, dict) or obj.get("harness") != HARNESS_VERSION:
        raise FrameError("harness version mismatch: peer sent %r"
                         % (obj.get("harness") if isinstance(obj, dict)
                            else obj,))
    if obj.get("protocol") != protocol:
        raise FrameError("peer runs protocol %r, not %r"
                         % (obj.get("protocol"), protocol))
    if obj.get("session") != session or obj.get("seed") != int(seed):
        raise FrameError("peer session or seed does not match")


def _send_control(fh, obj):
    body = canonical_json(obj)
    fh.write(_LENGTH.pack(len(body)) + body)
    fh.flush()


def _recv_control(fh):
    header = _read_exact(fh, _LENGTH.size)
    (length,) = _LENGTH.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise FrameError("control frame length %d exceeds the cap" % length)
    body = _read_exact(fh, length)
    try:
        return json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError("control frame is not valid JSON: %s" % exc) from None


def _socket_session(party, conn, protocol, seed, timeout):
    """Run one session over a connected socket; never raises for peer faults.

    Returns (status, detail, messages).  The local party speaks first when
    it is the client; turns then strictly alternate.  Two consecutive
    empty turns end the session.
    """
    session = session_id(protocol, seed)
    seq = _Sequencer(session)
    peer_role = "server" if party.role == "client" else "client"
    messages = []
    conn.settimeout(timeout)
    fh = conn.makefile("rwb")
    try:
        _send_control(fh, _hello(protocol, session, seed))
        _check_hello(_recv_control(fh), protocol, session, seed)
        pending = [None] if party.role == "client" else None
        sent_empty = received_empty = False
        while True:
            if pending is not None:
                outgoing = []
                for raw in pending:
                    outgoing.extend(party.on_message(raw))
                batch = [seq.stamp(party.role, raw) for raw in outgoing]
                messages.extend(batch)
                _send_turn(fh, batch)
                sent_empty = not batch
                if sent_empty and received_empty:
                    break
            received = _recv_turn(fh)
            for msg in received:
                seq.expect(msg, peer_role)
            messages.extend(received)
            received_empty = not received
            if received_empty and sent_empty:
                break
            pending = [{"kind": m.kind, "payload": m.payload}
                       for m in received]
        return "complete", None, messages
    except socket.timeout:
        return "timeout", "no data within %.3f s" % timeout, messages
    except ConnectionError as exc:
        return "disconnected", str(exc), messages
    except FrameError as exc:
        return "error", str(exc), messages
    finally:
        try:
            fh.close()
        except (OSError, ValueError):
            pass


def _finish(party, protocol, seed, role, status, detail, messages):
    outcome = {"status": status,
               "result": party.result if status == "complete" else None}
    if detail:
        outcome["detail"] = detail
    return Transcript(protocol, int(seed), session_id(protocol, seed), role,
                      outcome, messages)


def open_listener(host: str, port: int) -> socket.socket:
    """Bound, listening TCP socket; port 0 picks a free port."""
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    sock.listen(1)
    return sock


def serve_on(listener: socket.socket, protocol: str, seed: int, config=None,
             timeout: float = 30.0) -> Transcript:
    """Accept one connection on an open listener and run the server role."""
    party = make_party(protocol, "server", seed, config)
    listener.settimeout(timeout)
    conn, _addr = listener.accept()
    with conn:
        status, detail, messages = _socket_session(
            party, conn, protocol, seed, timeout)
    return _finish(party, protocol, seed, "server", status, detail, messages)


def serve_once(protocol: str, seed: int, host: str, port: int, config=None,
               timeout: float = 30.0) -> Transcript:
    """Listen, serve exactly one session, close the listener."""
    listener = open_listener(host, port)
    try:
        return serve_on(listener, protocol, seed, config, timeout)
    finally:
        listener.close()


def connect_and_run(protocol: str, seed: int, host: str, port: int,
                    config=None, timeout: float = 30.0) -> Transcript:
    """Dial a listening peer and run the client role of one session."""
    party = make_party(protocol, "client", seed, config)
    with socket.create_connection((host, port), timeout=timeout) as conn:
        status, detail, messages = _socket_session(
            party, conn, protocol, seed, timeout)
    return _finish(party, protocol, seed, "client", status, detail, messages)
