"""Query-budgeted encryption/decryption oracle for the toy cipher.

Wire protocol (TCP, one LF-terminated UTF-8 line per message):

    ENC <hh>   -> CIP <hh>        DEC <hh>  -> PLA <hh>
    BUDGET     -> REM <enc> <dec> QUIT      -> BYE
    anything malformed or over budget -> ERR <token>

Blocks are 6-bit values written as two hex digits (00..3F).
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from .toy_cipher import ToyCipherSpec, encrypt, trapdoor_check

log = logging.getLogger(__name__)

DEFAULT_ENC_BUDGET = 63
DEFAULT_DEC_BUDGET = 63


class OracleError(RuntimeError):
    pass


class BudgetExceeded(OracleError):
    def __init__(self, kind: str):
        super().__init__(f"{kind} budget exceeded")
        self.kind = kind


class ConnectionLost(OracleError):
    pass


class ProtocolViolation(OracleError):
    pass


def _tables(spec: ToyCipherSpec, key: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    size = 1 << spec.block_width
    enc = tuple(encrypt(v, key, spec) for v in range(size))
    dec = [0] * size
    for v, c in enumerate(enc):
        dec[c] = v
    return enc, tuple(dec)


@dataclass
class OracleSession:
    """One client's view of the oracle: a key and two monotone counters."""

    enc_table: Tuple[int, ...] = field(repr=False)
    dec_table: Tuple[int, ...] = field(repr=False)
    enc_budget: int = DEFAULT_ENC_BUDGET
    dec_budget: int = DEFAULT_DEC_BUDGET
    enc_used: int = 0
    dec_used: int = 0

    def __post_init__(self):
        self._lock = threading.Lock()

    def encrypt(self, v: int) -> int:
        with self._lock:
            if self.enc_used >= self.enc_budget:
                raise BudgetExceeded("enc")
            self.enc_used += 1
        return self.enc_table[v]

    def decrypt(self, c: int) -> int:
        with self._lock:
            if self.dec_used >= self.dec_budget:
                raise BudgetExceeded("dec")
            self.dec_used += 1
        return self.dec_table[c]

    def remaining(self) -> Tuple[int, int]:
        with self._lock:
            return self.enc_budget - self.enc_used, self.dec_budget - self.dec_used


class LocalOracle(OracleSession):
    """In-process oracle with the same interface as OracleClient."""

    def __init__(self, spec: ToyCipherSpec, key: int, enc_budget: int = DEFAULT_ENC_BUDGET,
                 dec_budget: int = DEFAULT_DEC_BUDGET):
        enc, dec = _tables(spec, key)
        super().__init__(enc, dec, enc_budget, dec_budget)


# -- server ----------------------------------------------------------------------

def handle_line(session: OracleSession, line: str) -> Tuple[str, bool]:
    """Reply to one request line; the flag says whether to close the session."""
    parts = line.split()
    if not parts:
        return "ERR syntax", False
    cmd = parts[0].upper()
    if cmd == "QUIT" and len(parts) == 1:
        return "BYE", True
    if cmd == "BUDGET" and len(parts) == 1:
        enc, dec = session.remaining()
        return f"REM {enc} {dec}", False
    if cmd in ("ENC", "DEC"):
        if len(parts) != 2 or len(parts[1]) != 2:
            return "ERR syntax", False
        try:
            v = int(parts[1], 16)
        except ValueError:
            return "ERR syntax", False
        if v >= len(session.enc_table):
            return "ERR range", False
        try:
            if cmd == "ENC":
                return f"CIP {session.encrypt(v):02X}", False
            return f"PLA {session.decrypt(v):02X}", False
        except BudgetExceeded:
            return "ERR budget", False
    return "ERR unknown", False


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server: OracleServer = self.server  # type: ignore[assignment]
        session = server.new_session()
        for raw in self.rfile:
            try:
                line = raw.decode("utf-8").strip()
            except UnicodeDecodeError:
                line = ""
            reply, close = handle_line(session, line)
            self.wfile.write((reply + "\n").encode())
            self.wfile.flush()
            if close:
                break


class OracleServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: Tuple[str, int], spec: ToyCipherSpec, key: int,
                 enc_budget: int = DEFAULT_ENC_BUDGET, dec_budget: int = DEFAULT_DEC_BUDGET):
        self.spec = spec
        self.enc_budget = enc_budget
        self.dec_budget = dec_budget
        self._enc, self._dec = _tables(spec, key)
        # kept server-side, never sent to clients
        self.trapdoor = trapdoor_check(spec)
        self.sessions: List[OracleSession] = []
        self._sessions_lock = threading.Lock()
        self._thread: Optional[threading.Thread] = None
        super().__init__(address, _Handler)

    def new_session(self) -> OracleSession:
        s = OracleSession(self._enc, self._dec, self.enc_budget, self.dec_budget)
        with self._sessions_lock:
            self.sessions.append(s)
        return s

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"tcp://{host}:{port}"

    def start(self) -> "OracleServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        log.info("oracle listening on %s", self.endpoint)
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread:
            self._thread.join()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def serve(address: Tuple[str, int], spec: ToyCipherSpec, key: int,
          enc_budget: int = DEFAULT_ENC_BUDGET, dec_budget: int = DEFAULT_DEC_BUDGET
          ) -> OracleServer:
    """Bind and start serving in a background thread."""
    return OracleServer(address, spec, key, enc_budget, dec_budget).start()


# -- client ----------------------------------------------------------------------

def parse_endpoint(endpoint: Union[str, Tuple[str, int]]) -> Tuple[str, int]:
    if isinstance(endpoint, tuple):
        return endpoint
    rest = endpoint[len("tcp://"):] if endpoint.startswith("tcp://") else endpoint
    host, sep, port = rest.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"bad endpoint {endpoint!r}; expected tcp://host:port")
    return host, int(port)


class OracleClient:
    """Line-protocol client with local query counters."""

    def __init__(self, endpoint: Union[str, Tuple[str, int]], timeout: float = 10.0):
        self._sock = socket.create_connection(parse_endpoint(endpoint), timeout=timeout)
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")
        self.enc_used = 0
        self.dec_used = 0

    def _roundtrip(self, line: str) -> str:
        try:
            self._file.write(line + "\n")
            self._file.flush()
            reply = self._file.readline()
        except OSError as exc:
            raise ConnectionLost(str(exc)) from exc
        if not reply:
            raise ConnectionLost("server closed the connection")
        return reply.strip()

    def query(self, kind: str, v: int) -> int:
        if kind not in ("enc", "dec"):
            raise ValueError("kind must be 'enc' or 'dec'")
        reply = self._roundtrip(f"{kind.upper()} {v:02X}")
        expect = "CIP" if kind == "enc" else "PLA"
        if reply == "ERR budget":
            raise BudgetExceeded(kind)
        parts = reply.split()
        if len(parts) != 2 or parts[0] != expect:
            raise ProtocolViolation(f"unexpected reply {reply!r}")
        try:
            out = int(parts[1], 16)
        except ValueError:
            raise ProtocolViolation(f"unexpected reply {reply!r}") from None
        if kind == "enc":
            self.enc_used += 1
        else:
            self.dec_used += 1
        return out

    def encrypt(self, v: int) -> int:
        return self.query("enc", v)

    def decrypt(self, c: int) -> int:
        return self.query("dec", c)

    def remaining(self) -> Tuple[int, int]:
        parts = self._roundtrip("BUDGET").split()
        if len(parts) != 3 or parts[0] != "REM":
            raise ProtocolViolation(f"unexpected reply {' '.join(parts)!r}")
        return int(parts[1]), int(parts[2])

    def close(self) -> None:
        try:
            self._roundtrip("QUIT")
        except OracleError:
            pass
        finally:
            self._file.close()
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def client_query(client: OracleClient, kind: str, v: int) -> int:
    return client.query(kind, v)
