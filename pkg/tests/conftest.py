from __future__ import annotations

import pytest

from fracvault import standard_world
from fracvault.ledger import ChainState

from helpers import tx

ACTORS = ("alice", "bob", "carol", "dave")
START_NATIVE = 1_000_000


@pytest.fixture
def chain() -> ChainState:
    state = ChainState()
    for name in ACTORS:
        state.fund(name, START_NATIVE)
    return state


@pytest.fixture
def world():
    """Standard stack plus NFTs 1..2 for alice and 3 for bob."""
    state, handle = standard_world({name: START_NATIVE for name in ACTORS})
    for token_id, owner in ((1, "alice"), (2, "alice"), (3, "bob")):
        tx(state, "deployer", handle.collection, "mint", to=owner, token_id=token_id)
    return state, handle
