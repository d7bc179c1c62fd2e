"""Shared test shorthand."""

from __future__ import annotations

from fracvault.ledger import ChainState


def tx(state: ChainState, sender: str, module: str, method: str, value: int = 0, **args):
    result = state.transact(sender, module, method, args, value=value)
    assert result.ok, f"{module}.{method} failed: {result.error}: {result.error_message}"
    return result.value


def tx_err(state: ChainState, error: str, sender: str, module: str, method: str,
           value: int = 0, **args):
    result = state.transact(sender, module, method, args, value=value)
    assert not result.ok, f"{module}.{method} unexpectedly succeeded: {result.value!r}"
    assert result.error == error, (
        f"expected {error}, got {result.error}: {result.error_message}")
    return result


def native_total(state: ChainState) -> int:
    return sum(state.native.values())
