"""Deterministic world-state ledger with transactional call frames.

One ``ChainState`` instance is the entire simulated world: native currency
balances, any number of fungible and non-fungible token ledgers, a logical
clock, installed protocol modules, and the committed event log.

Every mutation flows through the journaled write helpers (``jset``,
``jsetattr``, ``jappend``, ...).  A call frame is a marker into the undo
journal; rolling a frame back replays the undo entries in reverse, so a
transaction that raises leaves the committed state byte for byte unchanged,
events included.  Frames nest: ``transact`` opens the outermost frame,
``call`` opens one per nested module call, and native transfers execute
recipient payment hooks inside their own child frame so that a reverting
hook fails only the transfer, never the caller's frame directly.

Determinism: no wall clock, no ambient randomness, insertion-ordered dicts
only.  Identical genesis plus an identical transaction sequence produces an
identical state digest and event log.
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

from . import errors

Address = str

ZERO_ADDRESS: Address = "0x0"
MAX_CALL_DEPTH = 16


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def normalize(value: Any) -> Any:
    """Render a value as portable JSON data: ints become decimal strings."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if isinstance(value, dict):
        return {str(k): normalize(v) for k, v in value.items()}
    if hasattr(value, "as_data"):
        return normalize(value.as_data())
    raise TypeError(f"cannot canonicalize {type(value).__name__}")


def digest_of(data: Any) -> str:
    return hashlib.sha256(canonical_json(normalize(data)).encode()).hexdigest()


@dataclass(frozen=True)
class ExecutionContext:
    """Per-call frame view: who is calling, with how much attached value."""

    sender: Address
    value: int = 0
    depth: int = 0


@dataclass
class Event:
    name: str
    emitter: str
    payload: tuple[tuple[str, Any], ...]
    frame: int
    tx_index: int

    def as_data(self) -> dict:
        return {
            "name": self.name,
            "emitter": self.emitter,
            "payload": [[k, normalize(v)] for k, v in self.payload],
            "frame": self.frame,
            "tx": self.tx_index,
        }


@dataclass(frozen=True)
class HookCall:
    """One scripted nested call a hooked account issues on payment receipt.

    ``require_success=False`` swallows a revert of this call (the hook keeps
    going), which is how an adversary probes a guarded operation without
    sabotaging its own payout.
    """

    module: str
    method: str
    args: tuple[tuple[str, Any], ...] = ()
    value: int = 0
    require_success: bool = False
    record_result: bool = False


@dataclass
class ReceiveHook:
    """Bounded script an account runs whenever it receives native currency.

    ``reject=True`` refuses the payment outright.  ``max_activations`` caps
    how many times the script fires inside one transaction, so reentrant
    scripts terminate without relying on the global depth limit.
    ``observed`` collects results of ``record_result`` calls; it is attacker
    side memory, deliberately outside the journal.
    """

    owner: Address
    calls: tuple[HookCall, ...] = ()
    reject: bool = False
    max_activations: int | None = None
    observed: list[tuple[str, Any]] = field(default_factory=list)
    _fired_tx: int = field(default=-1, repr=False)
    _fired_count: int = field(default=0, repr=False)


@dataclass
class FungibleLedger:
    balances: dict[Address, int] = field(default_factory=dict)
    allowances: dict[tuple[Address, Address], int] = field(default_factory=dict)
    total_supply: int = 0


@dataclass
class NftLedger:
    owners: dict[int, Address] = field(default_factory=dict)
    approvals: dict[int, Address] = field(default_factory=dict)


@dataclass
class TxResult:
    ok: bool
    value: Any = None
    error: str | None = None
    error_message: str = ""
    events: list[Event] = field(default_factory=list)


class Module:
    """Base for installed protocol modules.

    ``exposed`` lists the methods reachable through ``transact``/``call``;
    ``payable`` the subset that accepts attached native value.  A module's
    address is its id, so module escrow is an ordinary native balance and
    currency conservation stays a single sum.
    """

    exposed: frozenset[str] = frozenset()
    payable: frozenset[str] = frozenset()

    def __init__(self, module_id: str):
        self.module_id = module_id
        self.address: Address = module_id

    def snapshot_data(self) -> dict:
        return {}


class NativeTransfers(Module):
    """Built-in pseudo module so plain currency sends are transactions too."""

    exposed = frozenset({"transfer", "balance_of"})

    def transfer(self, state: "ChainState", ctx: ExecutionContext, to: Address, amount: int) -> bool:
        state.transfer_native(ctx, ctx.sender, to, amount)
        return True

    def balance_of(self, state: "ChainState", ctx: ExecutionContext, owner: Address) -> int:
        return state.native.get(owner, 0)


class ChainState:
    def __init__(self, max_call_depth: int = MAX_CALL_DEPTH):
        self.native: dict[Address, int] = {}
        self.fungible: dict[str, FungibleLedger] = {}
        self.nft: dict[str, NftLedger] = {}
        self.clock: int = 0
        self.events: list[Event] = []
        self.modules: dict[str, Module] = {}
        self.hooks: dict[Address, ReceiveHook] = {}
        self.genesis_native_supply: int = 0
        self.max_call_depth = max_call_depth
        self.tx_index: int = 0
        self._undo: list[Callable[[], None]] = []
        self._frames: list[tuple[int, int]] = []  # (token, journal mark)
        self._next_frame_token: int = 1
        self._locks: set[tuple[str, str]] = set()
        self._event_hash: str = hashlib.sha256(b"").hexdigest()
        self.install_module(NativeTransfers("native"))

    # ------------------------------------------------------------------ #
    # World setup (outside transactions)
    # ------------------------------------------------------------------ #

    def fund(self, addr: Address, amount: int) -> None:
        """Credit genesis native currency. Only legal before the first transaction."""
        if self._frames or self.tx_index:
            raise RuntimeError("fund() is genesis-only")
        if amount < 0:
            raise ValueError("genesis amounts must be non-negative")
        self.native[addr] = self.native.get(addr, 0) + amount
        self.genesis_native_supply += amount

    def install_module(self, module: Module) -> Module:
        if self._frames:
            raise RuntimeError("cannot install a module inside a transaction")
        if module.module_id in self.modules:
            raise ValueError(f"module id {module.module_id!r} already installed")
        if module.address in self.native or module.address == ZERO_ADDRESS:
            raise ValueError(f"module address {module.address!r} already in use")
        self.modules[module.module_id] = module
        return module

    def is_module_address(self, addr: Address) -> bool:
        return addr in self.modules

    def set_receive_hook(self, addr: Address, hook: ReceiveHook | None) -> None:
        if self._frames:
            raise RuntimeError("hooks are installed between transactions")
        if hook is None:
            self.hooks.pop(addr, None)
        else:
            self.hooks[addr] = hook

    def create_fungible(self, ledger_id: str) -> FungibleLedger:
        if self._frames:
            raise RuntimeError("ledgers are created at deployment time")
        if ledger_id in self.fungible:
            raise ValueError(f"fungible ledger {ledger_id!r} exists")
        ledger = FungibleLedger()
        self.fungible[ledger_id] = ledger
        return ledger

    def create_nft_ledger(self, ledger_id: str) -> NftLedger:
        if self._frames:
            raise RuntimeError("ledgers are created at deployment time")
        if ledger_id in self.nft:
            raise ValueError(f"nft ledger {ledger_id!r} exists")
        ledger = NftLedger()
        self.nft[ledger_id] = ledger
        return ledger

    # ------------------------------------------------------------------ #
    # Logical clock
    # ------------------------------------------------------------------ #

    def advance_clock(self, delta: int) -> int:
        """Move simulated time forward. Only between transactions, never within one."""
        if self._frames:
            raise RuntimeError("the clock cannot move inside a transaction")
        if delta < 0:
            raise ValueError("clock only advances")
        self.clock += delta
        return self.clock

    # ------------------------------------------------------------------ #
    # Journal and frames
    # ------------------------------------------------------------------ #

    def _record(self, undo: Callable[[], None]) -> None:
        if self._frames:
            self._undo.append(undo)

    def jset(self, mapping: dict, key: Any, value: Any) -> None:
        if key in mapping:
            old = mapping[key]
            self._record(lambda: mapping.__setitem__(key, old))
        else:
            self._record(lambda: mapping.pop(key, None))
        mapping[key] = value

    def jdel(self, mapping: dict, key: Any) -> None:
        if key in mapping:
            old = mapping[key]
            self._record(lambda: mapping.__setitem__(key, old))
            del mapping[key]

    def jsetattr(self, obj: Any, name: str, value: Any) -> None:
        old = getattr(obj, name)
        self._record(lambda: setattr(obj, name, old))
        setattr(obj, name, value)

    def jappend(self, seq: list, item: Any) -> None:
        self._record(seq.pop)
        seq.append(item)

    def snapshot(self) -> int:
        """Open a frame; returns a token for rollback()."""
        token = self._next_frame_token
        self._next_frame_token += 1
        self._frames.append((token, len(self._undo)))
        return token

    def rollback(self, token: int) -> None:
        """Undo every mutation of the frame named by ``token`` and its children."""
        for i, (t, mark) in enumerate(self._frames):
            if t == token:
                while len(self._undo) > mark:
                    self._undo.pop()()
                del self._frames[i:]
                return
        raise errors.UnknownFrame(f"no live frame {token}")

    def _commit(self, token: int) -> None:
        if not self._frames or self._frames[-1][0] != token:
            raise errors.UnknownFrame(f"frame {token} is not on top")
        self._frames.pop()

    @contextmanager
    def reentrancy_lock(self, module_id: str, name: str = "nonreentrant") -> Iterator[None]:
        key = (module_id, name)
        if key in self._locks:
            raise errors.Reentered(f"{module_id}.{name} already held")
        self._locks.add(key)
        try:
            yield
        finally:
            self._locks.discard(key)

    # ------------------------------------------------------------------ #
    # Transactions and nested calls
    # ------------------------------------------------------------------ #

    def _module_for_call(self, module_id: str, method: str, value: int) -> Module:
        module = self.modules.get(module_id)
        if module is None:
            raise errors.UnknownOperation(f"no module {module_id!r}")
        if method not in module.exposed:
            raise errors.UnknownOperation(f"{module_id} does not expose {method!r}")
        if value > 0 and method not in module.payable:
            raise errors.NonPayable(f"{module_id}.{method} does not accept native value")
        return module

    def transact(self, sender: Address, module_id: str, method: str,
                 args: dict | None = None, value: int = 0) -> TxResult:
        """Execute one top-level transaction; commit on success, revert on any LedgerError."""
        if self._frames:
            raise RuntimeError("transactions do not nest; use call()")
        if value < 0:
            raise ValueError("attached value must be non-negative")
        token = self.snapshot()
        events_mark = len(self.events)
        ctx = ExecutionContext(sender=sender, value=value, depth=0)
        try:
            module = self._module_for_call(module_id, method, value)
            if value:
                self._debit_native(sender, value)
                self._credit_native(module.address, value)
            ret = self._dispatch(module, method, ctx, args)
            self._commit(token)
            result = TxResult(True, value=ret, events=list(self.events[events_mark:]))
        except errors.LedgerError as exc:
            self.rollback(token)
            result = TxResult(False, error=exc.name, error_message=str(exc))
        self._undo.clear()
        self.tx_index += 1
        return result

    def call(self, ctx: ExecutionContext, module_id: str, method: str,
             args: dict | None = None, *, sender: Address | None = None, value: int = 0) -> Any:
        """Nested module call in a child frame; reverts the child and re-raises on error."""
        sender = ctx.sender if sender is None else sender
        depth = ctx.depth + 1
        if depth > self.max_call_depth:
            raise errors.DepthExceeded(f"call depth {depth} exceeds {self.max_call_depth}")
        token = self.snapshot()
        try:
            module = self._module_for_call(module_id, method, value)
            if value:
                self._debit_native(sender, value)
                self._credit_native(module.address, value)
            child = ExecutionContext(sender=sender, value=value, depth=depth)
            ret = self._dispatch(module, method, child, args)
            self._commit(token)
            return ret
        except errors.LedgerError:
            self.rollback(token)
            raise

    def _dispatch(self, module: Module, method: str, ctx: ExecutionContext,
                  args: dict | None) -> Any:
        # malformed arguments (wrong names, incomparable types) revert rather
        # than escape as raw TypeErrors; scenario input is untrusted
        try:
            return getattr(module, method)(self, ctx, **dict(args or {}))
        except TypeError as exc:
            raise errors.UnknownOperation(
                f"bad arguments for {module.module_id}.{method}: {exc}") from exc

    # ------------------------------------------------------------------ #
    # Native currency
    # ------------------------------------------------------------------ #

    def _debit_native(self, addr: Address, amount: int) -> None:
        have = self.native.get(addr, 0)
        if amount > have:
            raise errors.InsufficientNative(f"{addr} holds {have}, needs {amount}")
        self.jset(self.native, addr, have - amount)

    def _credit_native(self, addr: Address, amount: int) -> None:
        self.jset(self.native, addr, self.native.get(addr, 0) + amount)

    def transfer_native(self, ctx: ExecutionContext, frm: Address, to: Address, amount: int) -> None:
        """Move native currency and run the recipient's payment hook, if any.

        The transfer and its hook share a child frame: a reverting hook rolls
        that frame back and surfaces as HookReverted, leaving the caller's
        own frame intact to handle the failure.
        """
        if amount < 0:
            raise errors.InvalidAmount("negative transfer")
        if to == ZERO_ADDRESS:
            raise errors.ZeroAddressRecipient("native transfer to the zero address")
        if self.is_module_address(to):
            raise errors.NonPayable(f"{to} does not accept plain native transfers")
        if self.native.get(frm, 0) < amount:
            raise errors.InsufficientNative(
                f"{frm} holds {self.native.get(frm, 0)}, needs {amount}")
        token = self.snapshot()
        try:
            self._debit_native(frm, amount)
            self._credit_native(to, amount)
            hook = self.hooks.get(to)
            if amount > 0 and hook is not None:
                self._run_hook(ctx, hook)
            self._commit(token)
        except errors.DepthExceeded:
            self.rollback(token)
            raise
        except errors.LedgerError as exc:
            self.rollback(token)
            raise errors.HookReverted(f"recipient hook failed: {exc.name}: {exc}") from exc

    def _run_hook(self, ctx: ExecutionContext, hook: ReceiveHook) -> None:
        if hook.reject:
            raise errors.HookReverted("payment rejected by recipient")
        if hook._fired_tx != self.tx_index:
            hook._fired_tx = self.tx_index
            hook._fired_count = 0
        if hook.max_activations is not None and hook._fired_count >= hook.max_activations:
            return
        hook._fired_count += 1
        depth = ctx.depth + 1
        if depth > self.max_call_depth:
            raise errors.DepthExceeded(f"hook at depth {depth} exceeds {self.max_call_depth}")
        hook_ctx = ExecutionContext(sender=hook.owner, value=0, depth=depth)
        for call_spec in hook.calls:
            try:
                ret = self.call(hook_ctx, call_spec.module, call_spec.method,
                                dict(call_spec.args), sender=hook.owner, value=call_spec.value)
                if call_spec.record_result:
                    hook.observed.append((call_spec.method, ret))
            except errors.LedgerError as exc:
                if call_spec.record_result:
                    hook.observed.append((call_spec.method, f"error:{exc.name}"))
                if call_spec.require_success:
                    raise

    # ------------------------------------------------------------------ #
    # Fungible ledgers
    # ------------------------------------------------------------------ #

    def _fungible(self, ledger_id: str) -> FungibleLedger:
        ledger = self.fungible.get(ledger_id)
        if ledger is None:
            raise errors.UnknownOperation(f"no fungible ledger {ledger_id!r}")
        return ledger

    def fungible_balance(self, ledger_id: str, addr: Address) -> int:
        return self._fungible(ledger_id).balances.get(addr, 0)

    def fungible_supply(self, ledger_id: str) -> int:
        return self._fungible(ledger_id).total_supply

    def fungible_allowance(self, ledger_id: str, owner: Address, spender: Address) -> int:
        return self._fungible(ledger_id).allowances.get((owner, spender), 0)

    def fungible_transfer(self, ctx: ExecutionContext, ledger_id: str,
                          frm: Address, to: Address, amount: int) -> bool:
        """Move fungible units; third parties spend down a prior allowance.

        Returns an explicit success flag (callers check it) and reverts with
        a typed error on every failure path.
        """
        ledger = self._fungible(ledger_id)
        if amount < 0:
            raise errors.InvalidAmount("negative transfer")
        if to == ZERO_ADDRESS:
            raise errors.ZeroAddressRecipient("fungible transfer to the zero address")
        if ctx.sender != frm:
            allowed = ledger.allowances.get((frm, ctx.sender), 0)
            if amount > allowed:
                raise errors.InsufficientAllowance(
                    f"{ctx.sender} may spend {allowed} of {frm}'s {ledger_id}, needs {amount}")
            self.jset(ledger.allowances, (frm, ctx.sender), allowed - amount)
        have = ledger.balances.get(frm, 0)
        if amount > have:
            raise errors.InsufficientBalance(f"{frm} holds {have} {ledger_id}, needs {amount}")
        self.jset(ledger.balances, frm, have - amount)
        self.jset(ledger.balances, to, ledger.balances.get(to, 0) + amount)
        self.emit(ctx, ledger_id, "Transfer", {"from": frm, "to": to, "amount": amount})
        return True

    def fungible_approve(self, ctx: ExecutionContext, ledger_id: str,
                         spender: Address, amount: int) -> bool:
        ledger = self._fungible(ledger_id)
        if amount < 0:
            raise errors.InvalidAmount("negative allowance")
        if spender == ZERO_ADDRESS:
            raise errors.ZeroAddress("approval for the zero address")
        self.jset(ledger.allowances, (ctx.sender, spender), amount)
        self.emit(ctx, ledger_id, "Approval",
                  {"owner": ctx.sender, "spender": spender, "amount": amount})
        return True

    def fungible_mint(self, ctx: ExecutionContext, ledger_id: str, to: Address, amount: int) -> None:
        ledger = self._fungible(ledger_id)
        if amount < 0:
            raise errors.InvalidAmount("negative mint")
        if to == ZERO_ADDRESS:
            raise errors.ZeroAddressRecipient("mint to the zero address")
        self.jset(ledger.balances, to, ledger.balances.get(to, 0) + amount)
        self.jsetattr(ledger, "total_supply", ledger.total_supply + amount)
        self.emit(ctx, ledger_id, "Mint", {"to": to, "amount": amount})

    def fungible_burn(self, ctx: ExecutionContext, ledger_id: str, frm: Address, amount: int) -> None:
        ledger = self._fungible(ledger_id)
        if amount < 0:
            raise errors.InvalidAmount("negative burn")
        have = ledger.balances.get(frm, 0)
        if amount > have:
            raise errors.InsufficientBalance(f"{frm} holds {have} {ledger_id}, burn {amount}")
        self.jset(ledger.balances, frm, have - amount)
        self.jsetattr(ledger, "total_supply", ledger.total_supply - amount)
        self.emit(ctx, ledger_id, "Burn", {"from": frm, "amount": amount})

    def set_fungible_balance(self, ledger_id: str, addr: Address, amount: int) -> None:
        """Raw journaled balance write. Does not touch total supply."""
        ledger = self._fungible(ledger_id)
        self.jset(ledger.balances, addr, amount)

    # ------------------------------------------------------------------ #
    # NFT ledgers
    # ------------------------------------------------------------------ #

    def _nft(self, ledger_id: str) -> NftLedger:
        ledger = self.nft.get(ledger_id)
        if ledger is None:
            raise errors.UnknownOperation(f"no nft ledger {ledger_id!r}")
        return ledger

    def nft_owner(self, ledger_id: str, token_id: int) -> Address:
        ledger = self._nft(ledger_id)
        owner = ledger.owners.get(token_id)
        if owner is None:
            raise errors.UnknownToken(f"{ledger_id} has no token {token_id}")
        return owner

    def nft_mint(self, ctx: ExecutionContext, ledger_id: str, to: Address, token_id: int) -> None:
        ledger = self._nft(ledger_id)
        if to == ZERO_ADDRESS:
            raise errors.ZeroAddressRecipient("mint to the zero address")
        if token_id in ledger.owners:
            raise errors.TokenExists(f"{ledger_id} token {token_id} already minted")
        self.jset(ledger.owners, token_id, to)
        self.emit(ctx, ledger_id, "NFTMinted", {"to": to, "token_id": token_id})

    def nft_transfer(self, ctx: ExecutionContext, authority: Address, ledger_id: str,
                     token_id: int, to: Address) -> None:
        """Transfer a token; ``authority`` must be the owner or the approved address."""
        ledger = self._nft(ledger_id)
        owner = ledger.owners.get(token_id)
        if owner is None:
            raise errors.UnknownToken(f"{ledger_id} has no token {token_id}")
        if to == ZERO_ADDRESS:
            raise errors.ZeroAddressRecipient("nft transfer to the zero address")
        if authority != owner and ledger.approvals.get(token_id) != authority:
            raise errors.NotOwnerNorApproved(
                f"{authority} is neither owner nor approved for token {token_id}")
        self.jset(ledger.owners, token_id, to)
        self.jdel(ledger.approvals, token_id)
        self.emit(ctx, ledger_id, "NFTTransfer",
                  {"from": owner, "to": to, "token_id": token_id})

    def nft_approve(self, ctx: ExecutionContext, ledger_id: str, token_id: int,
                    spender: Address) -> None:
        ledger = self._nft(ledger_id)
        owner = ledger.owners.get(token_id)
        if owner is None:
            raise errors.UnknownToken(f"{ledger_id} has no token {token_id}")
        if ctx.sender != owner:
            raise errors.NotOwnerNorApproved(f"{ctx.sender} does not own token {token_id}")
        self.jset(ledger.approvals, token_id, spender)
        self.emit(ctx, ledger_id, "NFTApproval",
                  {"owner": owner, "spender": spender, "token_id": token_id})

    # ------------------------------------------------------------------ #
    # Events and digests
    # ------------------------------------------------------------------ #

    def emit(self, ctx: ExecutionContext, emitter: str, name: str, payload: dict) -> None:
        event = Event(name=name, emitter=emitter, payload=tuple(payload.items()),
                      frame=ctx.depth, tx_index=self.tx_index)
        self.jappend(self.events, event)
        chained = self._event_hash + canonical_json(event.as_data())
        self.jsetattr(self, "_event_hash", hashlib.sha256(chained.encode()).hexdigest())

    def digest(self) -> str:
        """Hash of the canonical committed-state document (see docs in README)."""
        doc = {
            "clock": self.clock,
            "genesis_supply": self.genesis_native_supply,
            "native": dict(self.native),
            "fungible": {
                lid: {
                    "supply": ledger.total_supply,
                    "balances": dict(ledger.balances),
                    "allowances": {f"{o}|{s}": v for (o, s), v in ledger.allowances.items()},
                }
                for lid, ledger in self.fungible.items()
            },
            "nft": {
                lid: {"owners": dict(ledger.owners), "approvals": dict(ledger.approvals)}
                for lid, ledger in self.nft.items()
            },
            "modules": {mid: m.snapshot_data() for mid, m in self.modules.items()},
            "event_count": len(self.events),
            "event_hash": self._event_hash,
        }
        return digest_of(doc)
