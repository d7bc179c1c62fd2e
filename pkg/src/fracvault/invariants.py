"""World-level invariant checkers.

Each checker inspects a committed state and returns ``None`` when the
invariant holds or a short description of the violation.  The fuzzer and
the property suite run these after every committed transaction.
"""

from __future__ import annotations

from typing import Callable

from .governance import EXECUTED, Governance, Timelock
from .ledger import ChainState, ZERO_ADDRESS
from .market import Market
from .system import SystemHandle
from .vault import Vault

Checker = Callable[[ChainState, SystemHandle], str | None]


def check_native_conservation(state: ChainState, handle: SystemHandle) -> str | None:
    total = sum(state.native.values())
    if total != state.genesis_native_supply:
        return (f"native total {total} drifted from genesis supply "
                f"{state.genesis_native_supply}")
    if any(v < 0 for v in state.native.values()):
        return "negative native balance"
    return None


def check_fungible_supply(state: ChainState, handle: SystemHandle) -> str | None:
    for ledger_id, ledger in state.fungible.items():
        total = sum(ledger.balances.values())
        if total != ledger.total_supply:
            return (f"{ledger_id}: supply {ledger.total_supply} but balances "
                    f"sum to {total}")
        if any(v < 0 for v in ledger.balances.values()):
            return f"{ledger_id}: negative balance"
    return None


def check_nft_single_owner(state: ChainState, handle: SystemHandle) -> str | None:
    for ledger_id, ledger in state.nft.items():
        for token_id, owner in ledger.owners.items():
            if not owner or owner == ZERO_ADDRESS:
                return f"{ledger_id}: token {token_id} owned by the zero address"
    return None


def check_vault_escrow(state: ChainState, handle: SystemHandle) -> str | None:
    vault: Vault = state.modules[handle.vault]  # type: ignore[assignment]
    claims = (sum(vault.pending.values())
              + sum(s.proceeds_remaining for s in vault.sales.values())
              + vault.active_bid_total()
              + vault.retained_dust)
    escrow = state.native.get(vault.address, 0)
    if escrow != claims:
        return f"vault escrow {escrow} != outstanding claims {claims}"
    if any(v < 0 for v in vault.pending.values()):
        return "negative pending withdrawal"
    return None


def check_sale_accounting(state: ChainState, handle: SystemHandle) -> str | None:
    vault: Vault = state.modules[handle.vault]  # type: ignore[assignment]
    for token_id, sale in vault.sales.items():
        if not 0 <= sale.proceeds_remaining <= sale.proceeds_total:
            return (f"sale {token_id}: credited payouts "
                    f"{sale.proceeds_total - sale.proceeds_remaining} outside "
                    f"0..{sale.proceeds_total}")
    return None


def check_vault_params(state: ChainState, handle: SystemHandle) -> str | None:
    vault: Vault = state.modules[handle.vault]  # type: ignore[assignment]
    if not 0 <= vault.royalty_percent <= 100:
        return f"royalty {vault.royalty_percent} outside 0..100"
    if vault.auction_duration <= 0:
        return f"auction duration {vault.auction_duration} not positive"
    for token_id, auction in vault.auctions.items():
        if auction.highest_bidder != ZERO_ADDRESS and \
                auction.highest_bid < auction.starting_price:
            return f"auction {token_id}: highest bid below the starting price"
    return None


def check_governance_soundness(state: ChainState, handle: SystemHandle) -> str | None:
    governance: Governance = state.modules[handle.governance]  # type: ignore[assignment]
    timelock: Timelock = state.modules[handle.timelock]  # type: ignore[assignment]
    for proposal in governance.proposals:
        if proposal.votes_for + proposal.votes_against != proposal.total_votes_cast:
            return f"proposal {proposal.proposal_id}: vote tallies disagree"
        if proposal.executed:
            quorum = proposal.supply_at_creation // 2
            if proposal.total_votes_cast <= quorum:
                return (f"proposal {proposal.proposal_id} executed with "
                        f"{proposal.total_votes_cast} votes against quorum {quorum}")
            if proposal.votes_for <= proposal.votes_against:
                return f"proposal {proposal.proposal_id} executed while defeated"
            entry = timelock.entries.get(proposal.proposal_id)
            if entry is None or entry.state != EXECUTED:
                return f"proposal {proposal.proposal_id} executed without the timelock"
            if entry.executed_at is None or \
                    entry.executed_at - entry.scheduled_at < timelock.delay:
                return (f"proposal {proposal.proposal_id} executed "
                        f"{entry.executed_at} after scheduling at "
                        f"{entry.scheduled_at}, below delay {timelock.delay}")
    return None


def check_market_books(state: ChainState, handle: SystemHandle) -> str | None:
    market: Market = state.modules[handle.market]  # type: ignore[assignment]
    held_a = state.fungible_balance(market.token_a, market.address)
    held_b = state.fungible_balance(market.token_b, market.address)
    if (held_a, held_b) != (market.reserve_a, market.reserve_b):
        return (f"pool holds ({held_a}, {held_b}) but books say "
                f"({market.reserve_a}, {market.reserve_b})")
    total = sum(market.shares.values())
    if total != market.total_shares:
        return f"share books {market.total_shares} != sum {total}"
    if any(v < 0 for v in market.shares.values()):
        return "negative share balance"
    return None


CHECKERS: dict[str, Checker] = {
    "native_conservation": check_native_conservation,
    "fungible_supply": check_fungible_supply,
    "nft_single_owner": check_nft_single_owner,
    "vault_escrow": check_vault_escrow,
    "sale_accounting": check_sale_accounting,
    "vault_params": check_vault_params,
    "governance_soundness": check_governance_soundness,
    "market_books": check_market_books,
}

ALL_INVARIANTS = tuple(CHECKERS)


def first_violation(state: ChainState, handle: SystemHandle,
                    names: tuple[str, ...] = ALL_INVARIANTS) -> str | None:
    for name in names:
        detail = CHECKERS[name](state, handle)
        if detail is not None:
            return f"{name}: {detail}"
    return None
