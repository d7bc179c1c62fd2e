"""Fraction token authorization, the write-once vault binding, and fungible
ledger semantics against a model under random operation sequences."""

from __future__ import annotations

import hypothesis.strategies as st
import pytest
from hypothesis import settings
from hypothesis.stateful import RuleBasedStateMachine, invariant, rule

from fracvault import standard_world
from fracvault.ledger import ChainState, ZERO_ADDRESS
from fracvault.tokens import FungibleToken

from helpers import tx, tx_err


@pytest.fixture
def world_basic():
    state, handle = standard_world({"alice": 1000, "bob": 1000})
    tx(state, "deployer", handle.collection, "mint", to="alice", token_id=1)
    return state, handle


# --------------------------------------------------------------------- #
# Vault-gated supply
# --------------------------------------------------------------------- #

def test_deposit_mints_thousand_fractions(world_basic):
    state, handle = world_basic
    tx(state, "alice", handle.vault, "deposit_nft",
       nft_address=handle.collection, token_id=1)
    assert state.fungible_balance(handle.fractions, "alice") == 1000
    assert state.fungible_supply(handle.fractions) == 1000


def test_non_vault_mint_rejected(world_basic):
    state, handle = world_basic
    tx_err(state, "NotVault", "alice", handle.fractions, "mint", to="alice", amount=5)
    tx_err(state, "NotVault", "deployer", handle.fractions, "mint",
           to="alice", amount=5)
    assert state.fungible_supply(handle.fractions) == 0


def test_non_vault_burn_rejected(world_basic):
    state, handle = world_basic
    tx(state, "alice", handle.vault, "deposit_nft",
       nft_address=handle.collection, token_id=1)
    tx_err(state, "NotVault", "alice", handle.fractions, "burn_from",
           frm="alice", amount=5)
    assert state.fungible_supply(handle.fractions) == 1000


def test_burn_beyond_balance(world_basic):
    state, handle = world_basic
    tx(state, "alice", handle.vault, "deposit_nft",
       nft_address=handle.collection, token_id=1)
    # exact-burn boundary via a withdrawal attempt with 999 fractions
    tx(state, "alice", handle.fractions, "transfer", to="bob", amount=1)
    tx_err(state, "InsufficientFractions", "alice", handle.vault, "withdraw_nft",
           nft_address=handle.collection, token_id=1)


def test_mint_zero_is_noop_success():
    state = ChainState()
    state.fund("d", 0)
    from fracvault.tokens import FractionalToken
    ftk = FractionalToken("f", state, "d", "F", "F")
    state.install_module(ftk)
    state.fund("v", 0)  # plain account standing in for a vault
    tx(state, "d", "f", "update_nft_vault", vault="v")
    tx(state, "v", "f", "mint", to="d", amount=0)
    assert state.fungible_supply("f") == 0


# --------------------------------------------------------------------- #
# Write-once vault binding
# --------------------------------------------------------------------- #

def test_vault_binding_set_once_with_event():
    state = ChainState()
    state.fund("d", 0)
    from fracvault.tokens import FractionalToken
    state.install_module(FractionalToken("f", state, "d", "F", "F"))
    result = state.transact("d", "f", "update_nft_vault", {"vault": "someone"})
    assert result.ok
    assert [e.name for e in result.events] == ["NFTVaultUpdated"]
    tx_err(state, "AlreadySet", "d", "f", "update_nft_vault", vault="other")
    assert state.modules["f"].nft_vault_addr == "someone"


def test_vault_binding_rejects_zero_address():
    state = ChainState()
    state.fund("d", 0)
    from fracvault.tokens import FractionalToken
    state.install_module(FractionalToken("f", state, "d", "F", "F"))
    tx_err(state, "ZeroAddress", "d", "f", "update_nft_vault", vault=ZERO_ADDRESS)
    assert not state.modules["f"].is_nft_vault_set


def test_vault_binding_owner_only():
    state = ChainState()
    state.fund("d", 0)
    state.fund("mallory", 0)
    from fracvault.tokens import FractionalToken
    state.install_module(FractionalToken("f", state, "d", "F", "F"))
    tx_err(state, "NotOwner", "mallory", "f", "update_nft_vault", vault="mallory")


def test_single_binding_event_over_lifetime(world_basic):
    state, handle = world_basic
    # the standard deployment already bound the vault once
    tx_err(state, "AlreadySet", "deployer", handle.fractions,
           "update_nft_vault", vault="elsewhere")
    updates = [e for e in state.events if e.name == "NFTVaultUpdated"]
    assert len(updates) == 1


# --------------------------------------------------------------------- #
# Fungible semantics against a model
# --------------------------------------------------------------------- #

HOLDERS = ["alice", "bob", "carol"]


class FungibleMachine(RuleBasedStateMachine):
    """Random transfers/approvals/mints/burns mirrored against plain dicts."""

    def __init__(self):
        super().__init__()
        self.state = ChainState()
        for h in HOLDERS:
            self.state.fund(h, 0)
        self.state.install_module(
            FungibleToken("tok", self.state, "alice", "Token", "TOK"))
        self.balances = {h: 0 for h in HOLDERS}
        self.allowances: dict[tuple[str, str], int] = {}
        self.supply = 0

    addr = st.sampled_from(HOLDERS)
    amount = st.integers(min_value=0, max_value=500)

    @rule(to=addr, amount=amount)
    def mint(self, to, amount):
        result = self.state.transact("alice", "tok", "mint",
                                     {"to": to, "amount": amount})
        assert result.ok
        self.balances[to] += amount
        self.supply += amount

    @rule(frm=addr, to=addr, amount=amount)
    def transfer(self, frm, to, amount):
        result = self.state.transact(frm, "tok", "transfer",
                                     {"to": to, "amount": amount})
        if amount <= self.balances[frm]:
            assert result.ok
            self.balances[frm] -= amount
            self.balances[to] += amount
        else:
            assert result.error == "InsufficientBalance"

    @rule(owner=addr, spender=addr, amount=amount)
    def approve(self, owner, spender, amount):
        assert self.state.transact(owner, "tok", "approve",
                                   {"spender": spender, "amount": amount}).ok
        self.allowances[(owner, spender)] = amount

    @rule(owner=addr, spender=addr, to=addr, amount=amount)
    def transfer_from(self, owner, spender, to, amount):
        result = self.state.transact(spender, "tok", "transfer_from",
                                     {"frm": owner, "to": to, "amount": amount})
        allowed = self.allowances.get((owner, spender), 0)
        if spender != owner and amount > allowed:
            assert result.error == "InsufficientAllowance"
        elif amount > self.balances[owner]:
            assert result.error == "InsufficientBalance"
        else:
            assert result.ok
            if spender != owner:
                self.allowances[(owner, spender)] = allowed - amount
            self.balances[owner] -= amount
            self.balances[to] += amount

    @rule(frm=addr, amount=amount)
    def burn(self, frm, amount):
        result = self.state.transact("alice", "tok", "burn_from",
                                     {"frm": frm, "amount": amount})
        if amount <= self.balances[frm]:
            assert result.ok
            self.balances[frm] -= amount
            self.supply -= amount
        else:
            assert result.error == "InsufficientBalance"

    @invariant()
    def mirrors_model(self):
        for h in HOLDERS:
            assert self.state.fungible_balance("tok", h) == self.balances[h]
        assert self.state.fungible_supply("tok") == self.supply
        ledger = self.state.fungible["tok"]
        assert sum(ledger.balances.values()) == ledger.total_supply


FungibleMachine.TestCase.settings = settings(
    max_examples=30, stateful_step_count=40, deadline=None)
TestFungibleSemantics = FungibleMachine.TestCase
