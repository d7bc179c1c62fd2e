"""Stateful randomized fuzzing of the assembled system.

A ``FuzzPlan`` fully determines a run: the same seed, step count, actor
count, weights and mutant produce byte-identical reports.  The generator
inspects the evolving world to build semi-valid transactions (reverts are
expected and count as coverage of the guard paths); every submitted action
is recorded as plain data so any prefix can be replayed from genesis.

On an invariant violation the failing prefix is shrunk by delete-only
ddmin: chunks first, then single elements, until the trace is 1-minimal
while still reproducing the same invariant failure.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any

from .invariants import ALL_INVARIANTS, first_violation
from .ledger import ChainState, HookCall, ReceiveHook, TxResult, ZERO_ADDRESS
from .mutations import HEALTHY, MUTANTS, Mutations
from .system import SystemHandle, standard_world

ACTOR_FUND = 10**9
PAIR_FUND = 10**9
BIG_APPROVAL = 10**27

DEFAULT_WEIGHTS: dict[str, int] = {
    "advance_clock": 10,
    "native_transfer": 4,
    "fraction_transfer": 8,
    "fraction_approve": 3,
    "pair_transfer": 4,
    "collection_mint": 2,
    "deposit": 8,
    "deposit_batch": 2,
    "withdraw_nft": 4,
    "start_auction": 6,
    "place_bid": 10,
    "end_auction": 6,
    "cancel_auction_attempt": 2,
    "redeem": 7,
    "withdraw_pending": 6,
    "set_duration_attempt": 2,
    "set_royalty_attempt": 2,
    "add_liquidity": 5,
    "remove_liquidity": 4,
    "trade": 8,
    "create_proposal": 3,
    "vote": 5,
    "execute_proposal": 4,
    "cancel_scheduled": 1,
}

CLOCK_STEPS = (1, 30, 600, 900, 3_600, 86_400, 604_800)


@dataclass(frozen=True)
class FuzzAction:
    kind: str  # "transact" or "advance_clock"
    sender: str = ""
    module: str = ""
    method: str = ""
    args: tuple[tuple[str, Any], ...] = ()
    value: int = 0
    delta: int = 0

    def as_data(self) -> dict:
        if self.kind == "advance_clock":
            return {"kind": self.kind, "delta": self.delta}
        return {"kind": self.kind, "sender": self.sender, "module": self.module,
                "method": self.method, "args": {k: v for k, v in self.args},
                "value": self.value}

    @classmethod
    def from_data(cls, data: dict) -> "FuzzAction":
        if data["kind"] == "advance_clock":
            return cls(kind="advance_clock", delta=int(data["delta"]))
        return cls(kind="transact", sender=data["sender"], module=data["module"],
                   method=data["method"], args=tuple(sorted(data["args"].items())),
                   value=int(data.get("value", 0)))


def transact_action(sender: str, module: str, method: str,
                    value: int = 0, **args: Any) -> FuzzAction:
    return FuzzAction(kind="transact", sender=sender, module=module, method=method,
                      args=tuple(sorted(args.items())), value=value)


def clock_action(delta: int) -> FuzzAction:
    return FuzzAction(kind="advance_clock", delta=delta)


@dataclass(frozen=True)
class FuzzPlan:
    seed: int
    steps: int
    actor_count: int = 6
    weights: tuple[tuple[str, int], ...] = tuple(DEFAULT_WEIGHTS.items())
    invariants: tuple[str, ...] = ALL_INVARIANTS
    check_revert_atomicity: bool = False
    mutant: str | None = None

    def mutations(self) -> Mutations:
        return MUTANTS[self.mutant] if self.mutant else HEALTHY

    def as_data(self) -> dict:
        return {"seed": self.seed, "steps": self.steps,
                "actor_count": self.actor_count,
                "weights": {k: v for k, v in self.weights},
                "invariants": list(self.invariants),
                "check_revert_atomicity": self.check_revert_atomicity,
                "mutant": self.mutant}


@dataclass
class Violation:
    invariant: str
    step: int
    detail: str
    digest: str
    trace: list[FuzzAction]

    def as_data(self) -> dict:
        return {"invariant": self.invariant, "step": self.step,
                "detail": self.detail, "digest": self.digest,
                "trace": [a.as_data() for a in self.trace]}


@dataclass
class FuzzReport:
    plan: FuzzPlan
    steps_executed: int
    commits: int
    reverts: int
    final_digest: str
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_data(self) -> dict:
        return {"format": "fracvault-fuzz-report-v1", "plan": self.plan.as_data(),
                "steps_executed": self.steps_executed, "commits": self.commits,
                "reverts": self.reverts, "final_digest": self.final_digest,
                "passed": self.ok,
                "violations": [v.as_data() for v in self.violations]}


# --------------------------------------------------------------------- #
# World
# --------------------------------------------------------------------- #

def build_fuzz_world(plan: FuzzPlan) -> tuple[ChainState, SystemHandle, list[str]]:
    """Funded actors, pre-minted NFTs and pair tokens, market approvals, and
    one actor wired with a reentry hook so guards stay under pressure."""
    actors = [f"a{i}" for i in range(plan.actor_count)]
    state, handle = standard_world({a: ACTOR_FUND for a in actors},
                                   mutations=plan.mutations())
    token_ids = list(range(1, 2 * plan.actor_count + 1))
    for i, token_id in enumerate(token_ids):
        owner = actors[i % len(actors)]
        _must(state.transact("deployer", handle.collection, "mint",
                             {"to": owner, "token_id": token_id}))
    for actor in actors:
        _must(state.transact("deployer", handle.pair, "mint",
                             {"to": actor, "amount": PAIR_FUND}))
        for token in (handle.fractions, handle.pair):
            _must(state.transact(actor, token, "approve",
                                 {"spender": handle.market, "amount": BIG_APPROVAL}))
    intruder = actors[-1]
    state.set_receive_hook(intruder, ReceiveHook(
        owner=intruder, max_activations=2, calls=(
            HookCall(module=handle.vault, method="withdraw_pending"),
            HookCall(module=handle.vault, method="redeem_fraction_value",
                     args=(("token_id", token_ids[0]), ("fraction_amount", 50))),
        )))
    return state, handle, actors


def _must(result: TxResult) -> None:
    if not result.ok:
        raise RuntimeError(f"fuzz world setup failed: {result.error}: "
                           f"{result.error_message}")


# --------------------------------------------------------------------- #
# Action generation
# --------------------------------------------------------------------- #

class ActionGenerator:
    def __init__(self, plan: FuzzPlan, state: ChainState, handle: SystemHandle,
                 actors: list[str]):
        self.plan = plan
        self.state = state
        self.handle = handle
        self.actors = actors
        self.rng = random.Random(plan.seed)
        names_weights = [(k, w) for k, w in plan.weights if w > 0]
        self.kinds = [k for k, _ in names_weights]
        self.weights = [w for _, w in names_weights]
        self.next_token_id = 1000  # fresh mints live above the genesis range

    # helpers ----------------------------------------------------------- #

    def actor(self) -> str:
        return self.rng.choice(self.actors)

    def recipient(self) -> str:
        # occasionally aim at the zero address to exercise the guard
        if self.rng.random() < 0.03:
            return ZERO_ADDRESS
        return self.rng.choice(self.actors)

    def _vault(self):
        return self.state.modules[self.handle.vault]

    def _market(self):
        return self.state.modules[self.handle.market]

    def _governance(self):
        return self.state.modules[self.handle.governance]

    def owned_tokens(self, owner: str) -> list[int]:
        owners = self.state.nft[self.handle.collection].owners
        return [t for t, o in owners.items() if o == owner]

    def vaulted_tokens(self) -> list[int]:
        return list(self._vault().original_owner)

    def amount_near(self, bound: int) -> int:
        if bound <= 0:
            return self.rng.randrange(0, 10)
        # mostly feasible, sometimes deliberately excessive
        upper = bound * 2 if self.rng.random() < 0.15 else bound
        return self.rng.randrange(0, max(upper, 1) + 1)

    # generation -------------------------------------------------------- #

    def generate(self) -> FuzzAction:
        kind = self.rng.choices(self.kinds, weights=self.weights, k=1)[0]
        return getattr(self, f"gen_{kind}")()

    def gen_advance_clock(self) -> FuzzAction:
        return clock_action(self.rng.choice(CLOCK_STEPS))

    def gen_native_transfer(self) -> FuzzAction:
        sender = self.actor()
        amount = self.amount_near(self.state.native.get(sender, 0) // 100)
        return transact_action(sender, "native", "transfer",
                               to=self.recipient(), amount=amount)

    def gen_fraction_transfer(self) -> FuzzAction:
        sender = self.actor()
        held = self.state.fungible_balance(self.handle.fractions, sender)
        return transact_action(sender, self.handle.fractions, "transfer",
                               to=self.recipient(), amount=self.amount_near(held))

    def gen_fraction_approve(self) -> FuzzAction:
        return transact_action(self.actor(), self.handle.fractions, "approve",
                               spender=self.rng.choice(self.actors + [self.handle.market]),
                               amount=self.rng.randrange(0, 10_000))

    def gen_pair_transfer(self) -> FuzzAction:
        sender = self.actor()
        held = self.state.fungible_balance(self.handle.pair, sender)
        return transact_action(sender, self.handle.pair, "transfer",
                               to=self.recipient(), amount=self.amount_near(held))

    def gen_collection_mint(self) -> FuzzAction:
        self.next_token_id += 1
        return transact_action("deployer", self.handle.collection, "mint",
                               to=self.actor(), token_id=self.next_token_id)

    def gen_deposit(self) -> FuzzAction:
        sender = self.actor()
        owned = self.owned_tokens(sender)
        token_id = self.rng.choice(owned) if owned and self.rng.random() < 0.85 \
            else self.rng.randrange(1, 20)
        return transact_action(sender, self.handle.vault, "deposit_nft",
                               nft_address=self.handle.collection, token_id=token_id)

    def gen_deposit_batch(self) -> FuzzAction:
        sender = self.actor()
        owned = self.owned_tokens(sender)[:3]
        return transact_action(sender, self.handle.vault, "deposit_nfts",
                               token_ids=tuple(owned))

    def gen_withdraw_nft(self) -> FuzzAction:
        tokens = self.vaulted_tokens()
        token_id = self.rng.choice(tokens) if tokens else self.rng.randrange(1, 20)
        return transact_action(self.actor(), self.handle.vault, "withdraw_nft",
                               nft_address=self.handle.collection, token_id=token_id)

    def gen_start_auction(self) -> FuzzAction:
        tokens = self.vaulted_tokens()
        token_id = self.rng.choice(tokens) if tokens else self.rng.randrange(1, 20)
        return transact_action(self.actor(), self.handle.vault, "start_auction",
                               asset_address=self.handle.collection,
                               token_id=token_id,
                               starting_price=self.rng.randrange(0, 1000),
                               duration=self.rng.choice([0, 600, 3_600, 86_400]))

    def _auction_tokens(self) -> list[int]:
        return [t for t, a in self._vault().auctions.items() if a.active]

    def gen_place_bid(self) -> FuzzAction:
        live = self._auction_tokens()
        token_id = self.rng.choice(live) if live else self.rng.randrange(1, 20)
        sender = self.actor()
        auction = self._vault().auctions.get(token_id)
        floor = max(auction.highest_bid, auction.starting_price) if auction else 10
        value = self.amount_near(min(floor + self.rng.randrange(1, 500),
                                     self.state.native.get(sender, 0)))
        return transact_action(sender, self.handle.vault, "place_bid",
                               value=value, token_id=token_id)

    def gen_end_auction(self) -> FuzzAction:
        live = self._auction_tokens()
        token_id = self.rng.choice(live) if live else self.rng.randrange(1, 20)
        return transact_action(self.actor(), self.handle.vault, "end_auction",
                               token_id=token_id)

    def gen_cancel_auction_attempt(self) -> FuzzAction:
        live = self._auction_tokens()
        token_id = self.rng.choice(live) if live else self.rng.randrange(1, 20)
        return transact_action(self.actor(), self.handle.vault, "cancel_auction",
                               token_id=token_id)

    def gen_redeem(self) -> FuzzAction:
        vault = self._vault()
        sold = [t for t, s in vault.sales.items() if s.proceeds_remaining > 0]
        token_id = self.rng.choice(sold) if sold else self.rng.randrange(1, 20)
        sender = self.actor()
        held = self.state.fungible_balance(self.handle.fractions, sender)
        return transact_action(sender, self.handle.vault, "redeem_fraction_value",
                               token_id=token_id,
                               fraction_amount=self.amount_near(held))

    def gen_withdraw_pending(self) -> FuzzAction:
        vault = self._vault()
        claimants = [a for a in self.actors if vault.pending.get(a, 0) > 0]
        sender = self.rng.choice(claimants) if claimants and self.rng.random() < 0.8 \
            else self.actor()
        return transact_action(sender, self.handle.vault, "withdraw_pending")

    def gen_set_duration_attempt(self) -> FuzzAction:
        return transact_action(self.actor(), self.handle.vault,
                               "set_auction_duration",
                               seconds=self.rng.randrange(0, 10_000))

    def gen_set_royalty_attempt(self) -> FuzzAction:
        return transact_action(self.actor(), self.handle.vault,
                               "set_royalty_percent",
                               percent=self.rng.randrange(0, 130))

    def gen_add_liquidity(self) -> FuzzAction:
        sender = self.actor()
        market = self._market()
        held_a = self.state.fungible_balance(market.token_a, sender)
        held_b = self.state.fungible_balance(market.token_b, sender)
        if market.total_shares == 0 or self.rng.random() < 0.2:
            amount_a = self.amount_near(min(held_a, 10_000))
            amount_b = self.amount_near(min(held_b, 10_000))
        else:
            amount_a = self.amount_near(min(held_a, market.reserve_a // 4 + 1))
            amount_b = amount_a * market.reserve_b // market.reserve_a \
                if market.reserve_a else 0
        return transact_action(sender, self.handle.market, "add_liquidity",
                               amount_a=amount_a, amount_b=amount_b)

    def gen_remove_liquidity(self) -> FuzzAction:
        sender = self.actor()
        held = self._market().shares.get(sender, 0)
        return transact_action(sender, self.handle.market, "remove_liquidity",
                               shares_burned=self.amount_near(held))

    def gen_trade(self) -> FuzzAction:
        sender = self.actor()
        market = self._market()
        token_in = self.rng.choice([market.token_a, market.token_b])
        held = self.state.fungible_balance(token_in, sender)
        amount_in = self.amount_near(min(held, 50_000))
        return transact_action(sender, self.handle.market, "execute_trade",
                               token_in=token_in, amount_in=amount_in,
                               min_amount_out=self.rng.choice([0, 0, 1, amount_in]))

    def gen_create_proposal(self) -> FuzzAction:
        kind = self.rng.choice(["set_auction_duration", "set_royalty_percent",
                                "cancel_auction"])
        if kind == "set_auction_duration":
            args = {"seconds": self.rng.randrange(600, 10**6)}
        elif kind == "set_royalty_percent":
            args = {"percent": self.rng.randrange(0, 101)}
        else:
            args = {"token_id": self.rng.randrange(1, 20)}
        return transact_action(self.actor(), self.handle.governance,
                               "create_proposal", description=f"change {kind}",
                               target=self.handle.vault,
                               action=(("args", tuple(sorted(args.items()))),
                                       ("kind", kind)),
                               voting_period=self.rng.choice([3_600, 86_400]))

    def gen_vote(self) -> FuzzAction:
        count = len(self._governance().proposals)
        proposal_id = self.rng.randrange(0, count) if count else 0
        return transact_action(self.actor(), self.handle.governance, "vote",
                               proposal_id=proposal_id,
                               support=self.rng.random() < 0.7)

    def gen_execute_proposal(self) -> FuzzAction:
        count = len(self._governance().proposals)
        proposal_id = self.rng.randrange(0, count) if count else 0
        return transact_action(self.actor(), self.handle.governance,
                               "execute_proposal", proposal_id=proposal_id)

    def gen_cancel_scheduled(self) -> FuzzAction:
        count = len(self._governance().proposals)
        proposal_id = self.rng.randrange(0, count) if count else 0
        return transact_action("deployer", self.handle.governance,
                               "cancel_scheduled", proposal_id=proposal_id)


# --------------------------------------------------------------------- #
# Execution, checking, shrinking
# --------------------------------------------------------------------- #

def _action_args(action: FuzzAction) -> dict:
    # governance actions travel as nested pair sequences; rebuild dicts
    args = {}
    for key, value in action.args:
        if key == "action" and isinstance(value, (tuple, list)):
            nested = {k: v for k, v in value}
            args[key] = {"kind": nested.get("kind"),
                         "args": {k: v for k, v in nested.get("args", ())}}
        elif isinstance(value, (tuple, list)):
            args[key] = list(value)
        else:
            args[key] = value
    return args


def run_action(state: ChainState, action: FuzzAction) -> TxResult | None:
    if action.kind == "advance_clock":
        state.advance_clock(action.delta)
        return None
    return state.transact(action.sender, action.module, action.method,
                          _action_args(action), value=action.value)


def _step_violation(state: ChainState, handle: SystemHandle, plan: FuzzPlan,
                    action: FuzzAction, pre_digest: str | None
                    ) -> tuple[TxResult | None, str | None]:
    result = run_action(state, action)
    if plan.check_revert_atomicity and result is not None and not result.ok:
        if state.digest() != pre_digest:
            return result, "revert_atomicity: failed transaction mutated state"
    return result, first_violation(state, handle, plan.invariants)


def run_fuzz(plan: FuzzPlan) -> FuzzReport:
    state, handle, actors = build_fuzz_world(plan)
    generator = ActionGenerator(plan, state, handle, actors)
    actions: list[FuzzAction] = []
    commits = reverts = 0
    violations: list[Violation] = []
    for step in range(plan.steps):
        action = generator.generate()
        actions.append(action)
        pre_digest = state.digest() if plan.check_revert_atomicity else None
        result, detail = _step_violation(state, handle, plan, action, pre_digest)
        if result is None or result.ok:
            commits += 1
        else:
            reverts += 1
        if detail is not None:
            invariant = detail.split(":", 1)[0]
            trace = shrink(plan, actions, invariant)
            violations.append(Violation(
                invariant=invariant, step=step, detail=detail,
                digest=state.digest(), trace=trace))
            break
    return FuzzReport(plan=plan, steps_executed=len(actions), commits=commits,
                      reverts=reverts, final_digest=state.digest(),
                      violations=violations)


def replay_violates(plan: FuzzPlan, actions: list[FuzzAction],
                    invariant: str) -> bool:
    state, handle, _ = build_fuzz_world(plan)
    for action in actions:
        pre_digest = state.digest() if plan.check_revert_atomicity else None
        _, detail = _step_violation(state, handle, plan, action, pre_digest)
        if detail is not None and detail.split(":", 1)[0] == invariant:
            return True
    return False


def shrink(plan: FuzzPlan, actions: list[FuzzAction], invariant: str,
           max_len: int = 4000) -> list[FuzzAction]:
    """Delete-only ddmin: drop chunks, then single steps, until 1-minimal."""
    trace = list(actions)
    if len(trace) > max_len:
        trace = trace[-max_len:]
        if not replay_violates(plan, trace, invariant):
            trace = list(actions)  # suffix alone insufficient; keep everything
    chunk = max(len(trace) // 2, 1)
    while chunk >= 1:
        i = 0
        while i < len(trace):
            candidate = trace[:i] + trace[i + chunk:]
            if candidate and replay_violates(plan, candidate, invariant):
                trace = candidate
            else:
                i += chunk
        chunk //= 2
    return trace
