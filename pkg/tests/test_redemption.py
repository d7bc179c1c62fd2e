"""Proceeds redemption and pending withdrawals: proportional payouts,
burn-before-pay, pull-over-push, and reentrancy behavior under hostile
payment hooks."""

from __future__ import annotations

import pytest

from fracvault import standard_world
from fracvault.ledger import HookCall, ReceiveHook

from helpers import native_total, tx, tx_err

ACTORS = {"alice": 10_000_000, "bob": 10_000_000, "carol": 10_000_000,
          "dave": 10_000_000}


def sold_world(royalty=0, sale_price=4_000_000, holders=None):
    """World where token 1 sold for ``sale_price``; fraction spread as given."""
    state, handle = standard_world(dict(ACTORS))
    tx(state, "deployer", handle.collection, "mint", to="alice", token_id=1)
    tx(state, "alice", handle.vault, "deposit_nft",
       nft_address=handle.collection, token_id=1)
    if royalty != 5:
        tx(state, handle.governance, handle.vault, "set_royalty_percent",
           percent=royalty)
    for to, amount in (holders or {}).items():
        tx(state, "alice", handle.fractions, "transfer", to=to, amount=amount)
    tx(state, "alice", handle.vault, "start_auction",
       asset_address=handle.collection, token_id=1, starting_price=1,
       duration=10_000)
    tx(state, "bob", handle.vault, "place_bid", token_id=1, value=sale_price)
    state.advance_clock(10_000)
    tx(state, "bob", handle.vault, "end_auction", token_id=1)
    return state, handle


def test_proportional_payout_quarter_of_supply():
    # 250 of 1000 fractions against 4,000,000 proceeds pays 1,000,000
    state, handle = sold_world(holders={"carol": 250})
    payout = tx(state, "carol", handle.vault, "redeem_fraction_value",
                token_id=1, fraction_amount=250)
    assert payout == 250 * 4_000_000 // 1000 == 1_000_000
    assert handle.vault_module(state).pending["carol"] == 1_000_000


def test_redeemed_fractions_cannot_redeem_twice():
    state, handle = sold_world(holders={"carol": 250})
    tx(state, "carol", handle.vault, "redeem_fraction_value",
       token_id=1, fraction_amount=250)
    assert state.fungible_balance(handle.fractions, "carol") == 0
    tx_err(state, "InsufficientFractions", "carol", handle.vault,
           "redeem_fraction_value", token_id=1, fraction_amount=250)


def test_redeem_zero_pays_zero_without_state_change():
    state, handle = sold_world(holders={"carol": 250})
    before = state.digest()
    payout = tx(state, "carol", handle.vault, "redeem_fraction_value",
                token_id=1, fraction_amount=0)
    assert payout == 0
    assert state.digest() == before


def test_redeem_without_sale():
    state, handle = standard_world(dict(ACTORS))
    tx(state, "deployer", handle.collection, "mint", to="alice", token_id=1)
    tx(state, "alice", handle.vault, "deposit_nft",
       nft_address=handle.collection, token_id=1)
    tx_err(state, "NoProceeds", "alice", handle.vault, "redeem_fraction_value",
           token_id=1, fraction_amount=10)


def test_full_redemption_leaves_only_dust():
    state, handle = sold_world(sale_price=999_999,
                               holders={"carol": 300, "dave": 299})
    vault = handle.vault_module(state)
    total = vault.sales[1].proceeds_total
    paid = 0
    for holder, amount in (("alice", 401), ("carol", 300), ("dave", 299)):
        paid += tx(state, holder, handle.vault, "redeem_fraction_value",
                   token_id=1, fraction_amount=amount)
    dust = total - paid
    assert 0 <= dust < 1000  # strictly under one unit per fraction
    assert vault.sales[1].proceeds_remaining == dust
    # bucket exhausted up to dust; nothing further to claim
    assert paid == sum(amount * total // 1000 for amount in (401, 300, 299))


def test_withdraw_pending_pays_exact_claim():
    state, handle = sold_world(holders={"carol": 250})
    tx(state, "carol", handle.vault, "redeem_fraction_value",
       token_id=1, fraction_amount=250)
    native_before = state.native["carol"]
    amount = tx(state, "carol", handle.vault, "withdraw_pending")
    assert amount == 1_000_000
    assert state.native["carol"] == native_before + 1_000_000
    assert handle.vault_module(state).pending["carol"] == 0
    tx_err(state, "NothingPending", "carol", handle.vault, "withdraw_pending")
    assert native_total(state) == state.genesis_native_supply


def test_withdraw_with_rejecting_hook_restores_pending():
    state, handle = sold_world(holders={"carol": 250})
    tx(state, "carol", handle.vault, "redeem_fraction_value",
       token_id=1, fraction_amount=250)
    state.set_receive_hook("carol", ReceiveHook(owner="carol", reject=True))
    before = state.digest()
    tx_err(state, "TransferFailed", "carol", handle.vault, "withdraw_pending")
    assert state.digest() == before
    assert handle.vault_module(state).pending["carol"] == 1_000_000
    # removing the hook makes the claim withdrawable again
    state.set_receive_hook("carol", None)
    tx(state, "carol", handle.vault, "withdraw_pending")


def test_reentrant_withdraw_sees_zero_and_is_locked():
    # During the payout hook the pending balance must read zero (effects
    # before interactions) and the nested withdraw must hit the guard.
    state, handle = sold_world(holders={"carol": 250})
    tx(state, "carol", handle.vault, "redeem_fraction_value",
       token_id=1, fraction_amount=250)
    hook = ReceiveHook(owner="carol", max_activations=1, calls=(
        HookCall(module=handle.vault, method="pending_of",
                 args=(("owner", "carol"),), record_result=True),
        HookCall(module=handle.vault, method="withdraw_pending",
                 record_result=True),
    ))
    state.set_receive_hook("carol", hook)
    native_before = state.native["carol"]
    tx(state, "carol", handle.vault, "withdraw_pending")
    assert state.native["carol"] == native_before + 1_000_000  # exactly once
    assert hook.observed == [
        ("pending_of", 0),
        ("withdraw_pending", "error:Reentered"),
    ]
    assert native_total(state) == state.genesis_native_supply


def test_reentrant_redeem_is_locked():
    state, handle = sold_world(holders={"carol": 500})
    tx(state, "carol", handle.vault, "redeem_fraction_value",
       token_id=1, fraction_amount=250)
    hook = ReceiveHook(owner="carol", max_activations=1, calls=(
        HookCall(module=handle.vault, method="redeem_fraction_value",
                 args=(("token_id", 1), ("fraction_amount", 250)),
                 record_result=True),
    ))
    state.set_receive_hook("carol", hook)
    tx(state, "carol", handle.vault, "withdraw_pending")
    assert hook.observed == [("redeem_fraction_value", "error:Reentered")]
    # the remaining fractions are untouched and redeemable honestly
    assert state.fungible_balance(handle.fractions, "carol") == 250


def test_escrow_equals_claims_at_every_boundary():
    state, handle = sold_world(holders={"carol": 300, "dave": 200})
    vault = handle.vault_module(state)

    def escrow_consistent():
        claims = (sum(vault.pending.values())
                  + sum(s.proceeds_remaining for s in vault.sales.values())
                  + vault.active_bid_total() + vault.retained_dust)
        return state.native[handle.vault] == claims

    assert escrow_consistent()
    tx(state, "carol", handle.vault, "redeem_fraction_value",
       token_id=1, fraction_amount=300)
    assert escrow_consistent()
    tx(state, "carol", handle.vault, "withdraw_pending")
    assert escrow_consistent()
    tx(state, "dave", handle.vault, "redeem_fraction_value",
       token_id=1, fraction_amount=150)
    tx(state, "dave", handle.vault, "withdraw_pending")
    assert escrow_consistent()
    assert native_total(state) == state.genesis_native_supply


def test_resale_strands_old_bucket_as_dust():
    # bob wins token 1, re-deposits and sells it again while part of the
    # first bucket is unredeemed; the leftover becomes permanent dust.
    state, handle = sold_world(sale_price=1000, holders={"carol": 250})
    tx(state, "carol", handle.vault, "redeem_fraction_value",
       token_id=1, fraction_amount=250)
    vault = handle.vault_module(state)
    leftover = vault.sales[1].proceeds_remaining
    assert leftover > 0
    tx(state, "bob", handle.vault, "deposit_nft",
       nft_address=handle.collection, token_id=1)
    tx(state, "bob", handle.vault, "start_auction",
       asset_address=handle.collection, token_id=1, starting_price=1,
       duration=10_000)
    tx(state, "dave", handle.vault, "place_bid", token_id=1, value=500)
    state.advance_clock(10_000)
    tx(state, "dave", handle.vault, "end_auction", token_id=1)
    assert vault.retained_dust == leftover
    claims = (sum(vault.pending.values())
              + sum(s.proceeds_remaining for s in vault.sales.values())
              + vault.active_bid_total() + vault.retained_dust)
    assert state.native[handle.vault] == claims


@pytest.mark.parametrize("schedule", [
    (1, 999), (500, 500), (333, 333, 334), (100,) * 10,
])
def test_payout_sums_match_snapshot_formula(schedule):
    # Oracle: recompute each payout from the snapshot terms independently.
    state, handle = sold_world(sale_price=777_777)
    total = handle.vault_module(state).sales[1].proceeds_total
    recipients = []
    for i, amount in enumerate(schedule):
        holder = f"h{i}"
        tx(state, "alice", handle.fractions, "transfer", to=holder, amount=amount)
        recipients.append((holder, amount))
    paid = 0
    for holder, amount in recipients:
        payout = tx(state, holder, handle.vault, "redeem_fraction_value",
                    token_id=1, fraction_amount=amount)
        assert payout == amount * total // 1000
        paid += payout
    assert paid <= total
