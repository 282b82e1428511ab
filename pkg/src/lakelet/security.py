"""Timestamped signed tickets and role-based policy authorization.

A ticket is a single line of identity the lake can verify offline: the
holder's principal, roles, and validity window, signed with HMAC-SHA256
under one shared lake secret. Changing any field invalidates the
signature. Authorization is deny-by-default: a request is allowed only if
the ticket verifies, is inside its validity window, and some policy grants
one of the ticket's roles the requested action on a matching resource.

Resource patterns are segment globs: `*` matches exactly one path segment,
`**` matches any number (including zero). Nothing else is interpreted.

Every authorize() call emits exactly one audit event through the injected
sink, whether it allows or denies.
"""

import hmac
import hashlib
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .errors import (
    AccessDenied,
    BadSignature,
    InvalidPolicy,
    InvalidPrincipal,
    TicketExpired,
)

ACTIONS = ("Read", "Write", "Submit", "Admin")

SECRET_ENV_VAR = "LAKELET_SECRET"
_MIN_SECRET_BYTES = 32

# Characters that would break the one-line wire formats.
_FORBIDDEN = set("|,\t\n\r")


@dataclass(frozen=True)
class Ticket:
    principal: str
    roles: frozenset
    issued_at: int
    expires_at: int
    signature: str


@dataclass(frozen=True)
class Policy:
    role: str
    resource_pattern: str
    actions: frozenset

    def __post_init__(self):
        if not self.role:
            raise InvalidPolicy("policy role must be non-empty")
        if not self.actions:
            raise InvalidPolicy("policy must grant at least one action")
        bad = set(self.actions) - set(ACTIONS)
        if bad:
            raise InvalidPolicy(f"unknown actions: {sorted(bad)}")
        validate_pattern(self.resource_pattern)


@dataclass(frozen=True)
class Decision:
    """Outcome of an authorization check. Deny is a value, not an error."""

    allowed: bool
    reason: str
    principal: str = ""

    def __bool__(self) -> bool:
        return self.allowed


def _check_name(value: str, what: str) -> str:
    if not value or _FORBIDDEN & set(value):
        raise InvalidPrincipal(f"invalid {what}: {value!r}")
    return value


def _signing_payload(principal: str, roles: Iterable[str], issued_at: int, expires_at: int) -> bytes:
    return f"{principal}|{','.join(sorted(roles))}|{issued_at}|{expires_at}".encode("utf-8")


def _sign(secret: bytes, payload: bytes) -> str:
    return hmac.new(secret, payload, hashlib.sha256).hexdigest()


def issue_ticket(principal: str, roles: Iterable[str], now, ttl_ms: int, secret: bytes) -> Ticket:
    """Create a signed ticket valid for [now, now + ttl_ms)."""
    _check_name(principal, "principal")
    roles = frozenset(_check_name(r, "role") for r in roles)
    if ttl_ms <= 0:
        raise InvalidPrincipal(f"ttl_ms must be positive, got {ttl_ms}")
    issued_at = int(now)
    expires_at = issued_at + int(ttl_ms)
    sig = _sign(secret, _signing_payload(principal, roles, issued_at, expires_at))
    return Ticket(principal, roles, issued_at, expires_at, sig)


def validate_ticket(ticket: Ticket, now, secret: bytes):
    """Return (principal, roles) iff the signature holds and now is inside
    the half-open window [issued_at, expires_at)."""
    expected = _sign(secret, _signing_payload(ticket.principal, ticket.roles, ticket.issued_at, ticket.expires_at))
    if not hmac.compare_digest(ticket.signature, expected):
        raise BadSignature("ticket signature does not verify")
    if now < ticket.issued_at:
        raise TicketExpired(f"ticket not valid before {ticket.issued_at}")
    if now >= ticket.expires_at:
        raise TicketExpired(f"ticket expired at {ticket.expires_at}")
    return ticket.principal, ticket.roles


def serialize_ticket(ticket: Ticket) -> str:
    roles = ",".join(sorted(ticket.roles))
    return f"{ticket.principal}|{roles}|{ticket.issued_at}|{ticket.expires_at}|{ticket.signature}"


def parse_ticket(line: str) -> Ticket:
    parts = line.strip().split("|")
    if len(parts) != 5:
        raise BadSignature("malformed ticket line")
    principal, roles, issued, expires, sig = parts
    try:
        return Ticket(principal, frozenset(r for r in roles.split(",") if r), int(issued), int(expires), sig)
    except ValueError as exc:
        raise BadSignature(f"malformed ticket line: {exc}") from exc


def load_secret(env=os.environ) -> bytes:
    """Read the lake secret from the environment (hex, at least 32 bytes)."""
    raw = env.get(SECRET_ENV_VAR, "")
    if not raw:
        raise AccessDenied(f"{SECRET_ENV_VAR} is not set")
    try:
        secret = bytes.fromhex(raw.strip())
    except ValueError as exc:
        raise AccessDenied(f"{SECRET_ENV_VAR} must be hex: {exc}") from exc
    if len(secret) < _MIN_SECRET_BYTES:
        raise AccessDenied(f"{SECRET_ENV_VAR} must decode to at least {_MIN_SECRET_BYTES} bytes")
    return secret


def validate_pattern(pattern: str) -> None:
    if not pattern:
        raise InvalidPolicy("empty resource pattern")
    for seg in pattern.split("/"):
        if not seg:
            raise InvalidPolicy(f"empty segment in pattern {pattern!r}")
        if "*" in seg and seg not in ("*", "**"):
            raise InvalidPolicy(f"wildcard must be a whole segment in {pattern!r}")


def pattern_matches(pattern: str, resource: str) -> bool:
    """Segment-wise glob match; `*` is one segment, `**` any run of them."""
    return _match(pattern.split("/"), resource.split("/"))


def _match(pat, res) -> bool:
    if not pat:
        return not res
    head, rest = pat[0], pat[1:]
    if head == "**":
        # try swallowing 0..len(res) segments
        return any(_match(rest, res[i:]) for i in range(len(res) + 1))
    if not res:
        return False
    if head == "*" or head == res[0]:
        return _match(rest, res[1:])
    return False


def parse_policy_line(line: str) -> Policy:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise InvalidPolicy(f"expected role<TAB>pattern<TAB>actions, got {line!r}")
    role, pattern, actions = parts
    return Policy(role, pattern, frozenset(a for a in actions.split(",") if a))


def format_policy_line(policy: Policy) -> str:
    return f"{policy.role}\t{policy.resource_pattern}\t{','.join(sorted(policy.actions))}"


def load_policies(path) -> list:
    policies = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                policies.append(parse_policy_line(line))
    return policies


class PolicyEngine:
    """Validates tickets against the secret and requests against policies.

    The policy set is replaced atomically as a whole; authorize() itself is
    pure given (ticket, policies, now) apart from the audit emission.
    """

    def __init__(self, secret: bytes, policies: Iterable[Policy] = (), audit_sink: Optional[Callable] = None):
        self._secret = secret
        self._policies = tuple(policies)
        self._audit_sink = audit_sink

    @property
    def policies(self) -> tuple:
        return self._policies

    def replace_policies(self, policies: Iterable[Policy]) -> None:
        self._policies = tuple(policies)

    def authorize(self, ticket: Optional[Ticket], resource: str, action: str, now) -> Decision:
        if action not in ACTIONS:
            raise ValueError(f"unknown action {action!r}")
        principal = ticket.principal if ticket is not None else ""
        if ticket is None:
            decision = Decision(False, "no ticket presented")
        else:
            try:
                principal, roles = validate_ticket(ticket, now, self._secret)
            except BadSignature as exc:
                decision = Decision(False, str(exc), principal)
            except TicketExpired as exc:
                decision = Decision(False, str(exc), principal)
            else:
                if self._grants(roles, resource, action):
                    decision = Decision(True, "", principal)
                else:
                    decision = Decision(False, "no matching policy", principal)
        if self._audit_sink is not None:
            self._audit_sink(
                when=now,
                principal=principal or "?",
                resource=resource,
                action=action,
                outcome="Allow" if decision.allowed else "Deny",
                detail=decision.reason,
            )
        return decision

    def require(self, ticket: Optional[Ticket], resource: str, action: str, now) -> Decision:
        """authorize(), but raise AccessDenied on a deny."""
        decision = self.authorize(ticket, resource, action, now)
        if not decision:
            raise AccessDenied(f"{action} on {resource}: {decision.reason}")
        return decision

    def _grants(self, roles, resource: str, action: str) -> bool:
        for policy in self._policies:
            if policy.role in roles and action in policy.actions and pattern_matches(policy.resource_pattern, resource):
                return True
        return False
