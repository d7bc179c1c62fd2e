"""Scripted adversaries run against twin worlds.

Each strategy builds two identical worlds from the same genesis, installs
the hostile payment hook (or extra hostile transactions) in one of them,
runs the same legitimate script in both, and reports the attacker's net
position relative to the honest twin.  A hardened system yields a net gain
of exactly zero everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ledger import ChainState, HookCall, ReceiveHook
from .mutations import HEALTHY, Mutations
from .system import SystemHandle, standard_world

FUND = 10**9

STRATEGIES = ("ReenterWithdraw", "ReenterRedeem", "RejectPayment",
              "DoubleRedeem", "BidSniper", "GovernanceSpammer")


@dataclass
class AttackReport:
    strategy: str
    attacker: str
    net_native_gain: int
    net_fraction_gain: int
    details: dict = field(default_factory=dict)

    @property
    def neutralized(self) -> bool:
        return self.net_native_gain == 0 and self.net_fraction_gain == 0

    def as_data(self) -> dict:
        return {"strategy": self.strategy, "attacker": self.attacker,
                "net_native_gain": self.net_native_gain,
                "net_fraction_gain": self.net_fraction_gain,
                "neutralized": self.neutralized, "details": self.details}


def _position(state: ChainState, handle: SystemHandle, who: str) -> tuple[int, int]:
    """Attacker worth: native plus unclaimed pending, and fraction holdings."""
    vault = handle.vault_module(state)
    return (state.native.get(who, 0) + vault.pending.get(who, 0),
            state.fungible_balance(handle.fractions, who))


def _sold_world(mutations: Mutations, attacker_fractions: int,
                price: int = 1_000_000) -> tuple[ChainState, SystemHandle]:
    """Token 1 deposited by a0 and sold to a3; attacker a1 holds fractions."""
    state, handle = standard_world(
        {a: FUND for a in ("a0", "a1", "a2", "a3")}, mutations=mutations)
    for step in (
        ("deployer", handle.collection, "mint", {"to": "a0", "token_id": 1}),
        ("a0", handle.vault, "deposit_nft",
         {"nft_address": handle.collection, "token_id": 1}),
        ("a0", handle.fractions, "transfer",
         {"to": "a1", "amount": attacker_fractions}),
        ("a0", handle.vault, "start_auction",
         {"asset_address": handle.collection, "token_id": 1,
          "starting_price": 1, "duration": 10_000}),
        ("a3", handle.vault, "place_bid", {"token_id": 1}, price),
    ):
        sender, module, method, args = step[0], step[1], step[2], step[3]
        value = step[4] if len(step) > 4 else 0
        result = state.transact(sender, module, method, args, value=value)
        assert result.ok, f"{method}: {result.error_message}"
    state.advance_clock(10_000)
    result = state.transact("a2", handle.vault, "end_auction", {"token_id": 1})
    assert result.ok
    return state, handle


def _run_script(state: ChainState, handle: SystemHandle,
                script: list[tuple]) -> list:
    outcomes = []
    for sender, module, method, args, *rest in script:
        value = rest[0] if rest else 0
        result = state.transact(sender, module, method, args, value=value)
        outcomes.append(result.error if not result.ok else "ok")
    return outcomes


def reenter_withdraw(mutations: Mutations = HEALTHY) -> AttackReport:
    """Hook re-enters withdraw_pending during its own payout."""
    attacker = "a1"
    script = [
        (attacker, "vault", "redeem_fraction_value",
         {"token_id": 1, "fraction_amount": 250}),
        (attacker, "vault", "withdraw_pending", {}),
    ]
    honest, handle = _sold_world(mutations, attacker_fractions=250)
    _run_script(honest, handle, script)

    attacked, handle2 = _sold_world(mutations, attacker_fractions=250)
    hook = ReceiveHook(owner=attacker, max_activations=2, calls=(
        HookCall(module=handle2.vault, method="withdraw_pending",
                 record_result=True),
    ))
    attacked.set_receive_hook(attacker, hook)
    outcomes = _run_script(attacked, handle2, script)

    native_h, frac_h = _position(honest, handle, attacker)
    native_a, frac_a = _position(attacked, handle2, attacker)
    return AttackReport(
        strategy="ReenterWithdraw", attacker=attacker,
        net_native_gain=native_a - native_h, net_fraction_gain=frac_a - frac_h,
        details={"outcomes": outcomes, "hook_observed": list(map(list, hook.observed))})


def reenter_redeem(mutations: Mutations = HEALTHY) -> AttackReport:
    """Hook re-enters redeem_fraction_value during the withdraw payout."""
    attacker = "a1"
    script = [
        (attacker, "vault", "redeem_fraction_value",
         {"token_id": 1, "fraction_amount": 250}),
        (attacker, "vault", "withdraw_pending", {}),
        (attacker, "vault", "redeem_fraction_value",
         {"token_id": 1, "fraction_amount": 250}),
        (attacker, "vault", "withdraw_pending", {}),
    ]
    honest, handle = _sold_world(mutations, attacker_fractions=500)
    _run_script(honest, handle, script)

    attacked, handle2 = _sold_world(mutations, attacker_fractions=500)
    hook = ReceiveHook(owner=attacker, max_activations=2, calls=(
        HookCall(module=handle2.vault, method="redeem_fraction_value",
                 args=(("token_id", 1), ("fraction_amount", 250)),
                 record_result=True),
    ))
    attacked.set_receive_hook(attacker, hook)
    outcomes = _run_script(attacked, handle2, script)

    native_h, frac_h = _position(honest, handle, attacker)
    native_a, frac_a = _position(attacked, handle2, attacker)
    return AttackReport(
        strategy="ReenterRedeem", attacker=attacker,
        net_native_gain=native_a - native_h, net_fraction_gain=frac_a - frac_h,
        details={"outcomes": outcomes, "hook_observed": list(map(list, hook.observed))})


def double_redeem(mutations: Mutations = HEALTHY) -> AttackReport:
    """Plain second redemption of fractions that were already burned."""
    attacker = "a1"
    honest, handle = _sold_world(mutations, attacker_fractions=250)
    _run_script(honest, handle, [
        (attacker, "vault", "redeem_fraction_value",
         {"token_id": 1, "fraction_amount": 250}),
        (attacker, "vault", "withdraw_pending", {}),
    ])
    attacked, handle2 = _sold_world(mutations, attacker_fractions=250)
    outcomes = _run_script(attacked, handle2, [
        (attacker, "vault", "redeem_fraction_value",
         {"token_id": 1, "fraction_amount": 250}),
        (attacker, "vault", "redeem_fraction_value",
         {"token_id": 1, "fraction_amount": 250}),
        (attacker, "vault", "withdraw_pending", {}),
        (attacker, "vault", "withdraw_pending", {}),
    ])
    native_h, frac_h = _position(honest, handle, attacker)
    native_a, frac_a = _position(attacked, handle2, attacker)
    return AttackReport(
        strategy="DoubleRedeem", attacker=attacker,
        net_native_gain=native_a - native_h, net_fraction_gain=frac_a - frac_h,
        details={"outcomes": outcomes,
                 "second_redeem_rejected": outcomes[1] == "InsufficientFractions"})


def reject_payment(mutations: Mutations = HEALTHY) -> AttackReport:
    """Original owner refuses payments during settlement; pull-over-push
    means the auction still settles and the royalty stays claimable."""
    attacker = "a0"

    def build(with_hook: bool):
        state, handle = standard_world(
            {a: FUND for a in ("a0", "a1", "a2", "a3")}, mutations=mutations)
        for sender, module, method, args, *rest in (
            ("deployer", handle.collection, "mint", {"to": "a0", "token_id": 1}),
            ("a0", handle.vault, "deposit_nft",
             {"nft_address": handle.collection, "token_id": 1}),
            ("a0", handle.vault, "start_auction",
             {"asset_address": handle.collection, "token_id": 1,
              "starting_price": 1, "duration": 10_000}),
            ("a3", handle.vault, "place_bid", {"token_id": 1}, 1_000_000),
        ):
            value = rest[0] if rest else 0
            assert state.transact(sender, module, method, args, value=value).ok
        if with_hook:
            state.set_receive_hook(attacker,
                                   ReceiveHook(owner=attacker, reject=True))
        state.advance_clock(10_000)
        settle = state.transact("a2", handle.vault, "end_auction", {"token_id": 1})
        withdraw = state.transact(attacker, handle.vault, "withdraw_pending", {})
        return state, handle, settle, withdraw

    honest, handle, settle_h, _ = build(with_hook=False)
    attacked, handle2, settle_a, withdraw_a = build(with_hook=True)
    vault = handle2.vault_module(attacked)
    native_h, frac_h = _position(honest, handle, attacker)
    native_a, frac_a = _position(attacked, handle2, attacker)
    return AttackReport(
        strategy="RejectPayment", attacker=attacker,
        net_native_gain=native_a - native_h, net_fraction_gain=frac_a - frac_h,
        details={"settlement_committed": settle_a.ok,
                 "withdraw_error": withdraw_a.error,
                 "royalty_still_claimable": vault.pending.get(attacker, 0)})


def bid_sniper(mutations: Mutations = HEALTHY) -> AttackReport:
    """Last-minute bid triggers the extension; an honest rival retakes the
    lead inside the extra window and the sniper gets a full refund."""
    attacker = "a1"

    def build(with_snipe: bool):
        state, handle = standard_world(
            {a: FUND for a in ("a0", "a1", "a2", "a3")}, mutations=mutations)
        for sender, module, method, args, *rest in (
            ("deployer", handle.collection, "mint", {"to": "a0", "token_id": 1}),
            ("a0", handle.vault, "deposit_nft",
             {"nft_address": handle.collection, "token_id": 1}),
            ("a0", handle.vault, "start_auction",
             {"asset_address": handle.collection, "token_id": 1,
              "starting_price": 1, "duration": 10_000}),
            ("a2", handle.vault, "place_bid", {"token_id": 1}, 100),
        ):
            value = rest[0] if rest else 0
            assert state.transact(sender, module, method, args, value=value).ok
        state.advance_clock(10_000 - 60)
        end_before = handle.vault_module(state).auctions[1].end_time
        if with_snipe:
            assert state.transact(attacker, handle.vault, "place_bid",
                                  {"token_id": 1}, value=150).ok
            assert state.transact("a2", handle.vault, "place_bid",
                                  {"token_id": 1}, value=200).ok
        end_after = handle.vault_module(state).auctions[1].end_time
        state.advance_clock(end_after - state.clock)
        assert state.transact("a3", handle.vault, "end_auction", {"token_id": 1}).ok
        return state, handle, end_after - end_before

    honest, handle, _ = build(with_snipe=False)
    attacked, handle2, extension = build(with_snipe=True)
    native_h, frac_h = _position(honest, handle, attacker)
    native_a, frac_a = _position(attacked, handle2, attacker)
    return AttackReport(
        strategy="BidSniper", attacker=attacker,
        net_native_gain=native_a - native_h, net_fraction_gain=frac_a - frac_h,
        details={"extension_seconds": extension,
                 "winner": attacked.nft_owner(handle2.collection, 1),
                 "sniper_refund": handle2.vault_module(attacked).pending.get(attacker, 0)})


def governance_spammer(mutations: Mutations = HEALTHY) -> AttackReport:
    """Dust holder floods proposal creation and votes alone; nothing passes
    quorum and no governed parameter moves."""
    attacker = "a3"

    def build(with_spam: bool):
        state, handle = standard_world(
            {a: FUND for a in ("a0", "a1", "a2", "a3")}, mutations=mutations)
        for sender, module, method, args in (
            ("deployer", handle.collection, "mint", {"to": "a0", "token_id": 1}),
            ("a0", handle.vault, "deposit_nft",
             {"nft_address": handle.collection, "token_id": 1}),
            ("a0", handle.fractions, "transfer", {"to": attacker, "amount": 5}),
        ):
            assert state.transact(sender, module, method, args).ok
        outcomes = []
        if with_spam:
            proposal = {"kind": "set_royalty_percent", "args": {"percent": 0}}
            for _ in range(5):  # below the 10-fraction threshold
                outcomes.append(state.transact(
                    attacker, handle.governance, "create_proposal",
                    {"description": "spam", "target": handle.vault,
                     "action": proposal, "voting_period": 600}).error)
            assert state.transact("a0", handle.fractions, "transfer",
                                  {"to": attacker, "amount": 5}).ok
            created = state.transact(
                attacker, handle.governance, "create_proposal",
                {"description": "spam", "target": handle.vault,
                 "action": proposal, "voting_period": 600})
            assert created.ok
            assert state.transact(attacker, handle.governance, "vote",
                                  {"proposal_id": created.value,
                                   "support": True}).ok
            state.advance_clock(600)
            outcomes.append(state.transact(
                attacker, handle.governance, "execute_proposal",
                {"proposal_id": created.value}).error)
        return state, handle, outcomes

    honest, handle, _ = build(with_spam=False)
    attacked, handle2, outcomes = build(with_spam=True)
    vault_h = handle.vault_module(honest)
    vault_a = handle2.vault_module(attacked)
    native_h, frac_h = _position(honest, handle, attacker)
    native_a, frac_a = _position(attacked, handle2, attacker)
    return AttackReport(
        strategy="GovernanceSpammer", attacker=attacker,
        net_native_gain=native_a - native_h,
        net_fraction_gain=(frac_a - frac_h) - 5,  # the extra 5 were a gift
        details={"outcomes": outcomes,
                 "params_unchanged": (vault_a.royalty_percent,
                                      vault_a.auction_duration)
                 == (vault_h.royalty_percent, vault_h.auction_duration)})


ATTACKS = {
    "ReenterWithdraw": reenter_withdraw,
    "ReenterRedeem": reenter_redeem,
    "DoubleRedeem": double_redeem,
    "RejectPayment": reject_payment,
    "BidSniper": bid_sniper,
    "GovernanceSpammer": governance_spammer,
}


def run_attack(strategy: str, mutations: Mutations = HEALTHY) -> AttackReport:
    return ATTACKS[strategy](mutations)
