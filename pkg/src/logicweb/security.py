"""Policy assignment and the audit trail.

Every downloaded program gets exactly one policy program assigned at install
time, chosen by: trusted URL prefix (when enabled), else the verified signer
of a signed page, else the untrusted default. Policy programs themselves are
never assigned policies. The audit log records fetches and system calls with
the context chain and active policy set, so a session can be re-checked
after the fact.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import signatures
from .model import ProgramExpression, ProgramId, expr_text
from .signatures import KeyStore, UNKNOWN_SIGNER


class RegistryError(Exception):
    pass


class PolicyRegistry:
    def __init__(self, signer_to_policy: dict[str, ProgramId],
                 trusted: list[tuple[str, ProgramId]] | None = None,
                 trusted_enabled: bool = False,
                 keystore: KeyStore | None = None):
        if UNKNOWN_SIGNER not in signer_to_policy:
            raise RegistryError("registry must map the 'unknown' signer")
        self.signer_to_policy = dict(signer_to_policy)
        self.trusted = list(trusted or [])
        self.trusted_enabled = trusted_enabled
        self.keystore = keystore or KeyStore()
        self.program_to_policy: dict[ProgramId, ProgramId] = {}
        self.extra_policies: set[ProgramId] = set()

    # -- the set of policy programs (union of everything any map points at)

    @property
    def policy_ids(self) -> frozenset[ProgramId]:
        out = set(self.signer_to_policy.values())
        out.update(pid for _, pid in self.trusted)
        out.update(self.program_to_policy.values())
        out.update(self.extra_policies)
        return frozenset(out)

    def is_policy(self, pid: ProgramId) -> bool:
        return pid in self.policy_ids

    def register_policy(self, pid: ProgramId) -> None:
        """Mark an id as a policy program without tying it to a signer,
        for ad hoc checks and tests."""
        self.extra_policies.add(pid)

    @property
    def default_policy(self) -> ProgramId:
        return self.signer_to_policy[UNKNOWN_SIGNER]

    # -- per-program lookup

    def pol(self, pid: ProgramId) -> ProgramId:
        """The policy of a non-policy program. Undefined (and an error) for
        policy programs and for ids never assigned one."""
        if self.is_policy(pid):
            raise RegistryError(f"{pid.serialize()} is a policy program, it has no policy")
        got = self.program_to_policy.get(pid)
        if got is None:
            raise RegistryError(f"{pid.serialize()} has never been assigned a policy")
        return got

    def pols(self, pids: Iterable[ProgramId]) -> frozenset[ProgramId]:
        return frozenset(self.pol(p) for p in pids)

    # -- assignment pipeline, run once per installed program

    def determine_policy_id(self, url: str, contents: str) -> ProgramId:
        if self.trusted_enabled:
            for prefix, pid in self.trusted:
                if url.startswith(prefix):
                    return pid
        if signatures.is_signed(url):
            signer = signatures.authenticate(contents, self.keystore)
            got = self.signer_to_policy.get(signer)
            if got is not None:
                return got
            # a verified signer nobody registered a policy for: fall back
            # to the untrusted default rather than wedging the download
            return self.default_policy
        return self.default_policy

    def assign_policy(self, pid: ProgramId, contents: str) -> Optional[ProgramId]:
        """Pick and record the policy for a newly installed program.
        Policy programs get none; re-assignment never happens."""
        if self.is_policy(pid):
            return None
        if pid in self.program_to_policy:
            return self.program_to_policy[pid]
        chosen = self.determine_policy_id(pid.url, contents)
        self.program_to_policy[pid] = chosen
        return chosen

    # -- config file

    @classmethod
    def load(cls, path: str | Path, keystore: KeyStore | None = None,
             trusted_enabled: bool = False) -> "PolicyRegistry":
        """Line format: `signer <id> <policy-url>`, `default <policy-url>`,
        `trusted <url-prefix> <policy-url>`. Signer ids may contain spaces;
        the URL is always the last field."""
        signer_map: dict[str, ProgramId] = {}
        trusted: list[tuple[str, ProgramId]] = []
        text = Path(path).read_text(encoding="utf-8")
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            kind, _, rest = line.partition(" ")
            rest = rest.strip()
            if kind == "default":
                signer_map[UNKNOWN_SIGNER] = ProgramId.get(rest)
            elif kind == "signer":
                signer, _, url = rest.rpartition(" ")
                if not signer or not url:
                    raise RegistryError(f"bad signer line {lineno}: {raw!r}")
                signer_map[signer] = ProgramId.get(url)
            elif kind == "trusted":
                prefix, _, url = rest.rpartition(" ")
                if not prefix or not url:
                    raise RegistryError(f"bad trusted line {lineno}: {raw!r}")
                trusted.append((prefix, ProgramId.get(url)))
            else:
                raise RegistryError(f"bad registry line {lineno}: {raw!r}")
        if UNKNOWN_SIGNER not in signer_map:
            raise RegistryError("registry has no default policy")
        return cls(signer_map, trusted, trusted_enabled, keystore)


# ---------------------------------------------------------------- audit

@dataclass(frozen=True)
class AuditEvent:
    ts: float
    kind: str                                  # syscall | fetch | switch | notice
    detail: str                                # goal or id text
    chain: tuple[ProgramExpression, ...] = ()  # contexts from the query root
    sigma: tuple[ProgramId, ...] = ()          # active policies, newest first

    def format_line(self) -> str:
        chain = " -> ".join(expr_text(e) for e in self.chain) or "-"
        sigma = ", ".join(p.serialize() for p in self.sigma) or "-"
        return f"{self.ts:.6f} {self.kind} {self.detail} | context: {chain} | policies: {sigma}"


class AuditLog:
    """Always-on in-memory event trail with optional live listeners."""

    def __init__(self):
        self.events: list[AuditEvent] = []
        self.listeners: list[Callable[[AuditEvent], None]] = []

    def emit(self, kind: str, detail: str,
             chain: tuple[ProgramExpression, ...] = (),
             sigma: tuple[ProgramId, ...] = ()) -> AuditEvent:
        ev = AuditEvent(time.time(), kind, detail, chain, sigma)
        self.events.append(ev)
        for listen in self.listeners:
            listen(ev)
        return ev

    def lines(self) -> list[str]:
        return [ev.format_line() for ev in self.events]

    def of_kind(self, kind: str) -> list[AuditEvent]:
        return [ev for ev in self.events if ev.kind == kind]
