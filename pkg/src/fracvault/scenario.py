"""Scenario files: genesis, deployment, and an expected-outcome transaction
script, all in one JSON document.

Format (``fracvault-scenario-v1``): amounts are decimal strings; account and
module ids are strings containing at least one non-digit.  Every transaction
entry names a ``sender`` and a ``call`` ("module.method"), may attach
``value`` and a pre-call ``advance_clock``, and pins its outcome with
``expect``: either ``"success"`` or ``{"error": "<ErrorName>"}``.  A run
aborts on the first expectation mismatch, naming the step.

The bundled ``scenarios/lifecycle.json`` deploys the stack in the canonical
order (fraction token, NFT collection, vault, timelock, governance with its
vault registration, pair token, market) and walks deposit, auction,
redemption, withdrawal, governance and market trading end to end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .governance import Governance, Timelock
from .ledger import ChainState, HookCall, ReceiveHook, normalize
from .market import Market
from .mutations import HEALTHY, MUTANTS, Mutations
from .system import GenesisParams
from .tokens import FractionalToken, FungibleToken, NftCollection
from .vault import Vault

FORMAT = "fracvault-scenario-v1"


class ScenarioError(Exception):
    """Malformed scenario document; the message carries line/step context."""


class ExpectationMismatch(Exception):
    def __init__(self, step: int, expected: str, got: str, message: str = ""):
        self.step = step
        self.expected = expected
        self.got = got
        super().__init__(
            f"transactions[{step}]: expected {expected}, got {got}"
            + (f" ({message})" if message else ""))


@dataclass
class TraceRecord:
    step: int
    sender: str
    call: str
    args: dict
    value: int
    advance_clock: int
    result: str  # "success" or the error name
    returned: Any
    events: list[dict]
    digest: str

    def as_data(self) -> dict:
        return {"step": self.step, "sender": self.sender, "call": self.call,
                "args": normalize(self.args), "value": str(self.value),
                "advance_clock": str(self.advance_clock), "result": self.result,
                "return": normalize(self.returned), "events": self.events,
                "digest": self.digest}


@dataclass
class ScenarioRun:
    scenario: dict
    records: list[TraceRecord] = field(default_factory=list)
    state: ChainState | None = None


# --------------------------------------------------------------------- #
# Parsing
# --------------------------------------------------------------------- #

def parse_scenario(text: str) -> dict:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(document, dict):
        raise ScenarioError("scenario must be a JSON object")
    if document.get("format", FORMAT) != FORMAT:
        raise ScenarioError(f"unsupported format {document.get('format')!r}")
    for section, kind in (("genesis", dict), ("deployment", list),
                          ("transactions", list)):
        if not isinstance(document.get(section), kind):
            raise ScenarioError(f"{section!r} section missing or mistyped")
    genesis = document["genesis"]
    if not isinstance(genesis.get("accounts"), dict):
        raise ScenarioError("genesis.accounts missing or mistyped")
    for i, entry in enumerate(document["deployment"]):
        for key in ("id", "kind", "deployer"):
            if not isinstance(entry.get(key), str):
                raise ScenarioError(f"deployment[{i}]: missing {key!r}")
    for i, entry in enumerate(document["transactions"]):
        if not isinstance(entry.get("sender"), str):
            raise ScenarioError(f"transactions[{i}]: missing 'sender'")
        call = entry.get("call")
        if not isinstance(call, str) or call.count(".") != 1:
            raise ScenarioError(f"transactions[{i}]: 'call' must be "
                                "'module.method'")
        expect = entry.get("expect", "success")
        if expect != "success" and not (isinstance(expect, dict)
                                        and isinstance(expect.get("error"), str)):
            raise ScenarioError(f"transactions[{i}]: bad 'expect'")
    return document


def load_scenario(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _amount(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ScenarioError(f"{where}: amounts are decimal strings")
    try:
        number = int(value)
    except ValueError:
        raise ScenarioError(f"{where}: {value!r} is not a decimal amount") from None
    if number < 0:
        raise ScenarioError(f"{where}: negative amount")
    return number


def _decode(value: Any) -> Any:
    """File-to-runtime value mapping: digit strings become integers."""
    if isinstance(value, str) and value.isdigit():
        return int(value)
    if isinstance(value, list):
        return [_decode(v) for v in value]
    if isinstance(value, dict):
        return {k: _decode(v) for k, v in value.items()}
    return value


# --------------------------------------------------------------------- #
# World construction
# --------------------------------------------------------------------- #

def _parse_hook(owner: str, spec: dict) -> ReceiveHook:
    calls = []
    for entry in spec.get("calls", []):
        calls.append(HookCall(
            module=entry["module"], method=entry["method"],
            args=tuple(sorted(_decode(entry.get("args", {})).items())),
            value=_amount(entry.get("value", 0), f"hook of {owner}"),
            require_success=bool(entry.get("require_success", False)),
            record_result=bool(entry.get("record_result", False))))
    max_activations = spec.get("max_activations")
    return ReceiveHook(owner=owner, calls=tuple(calls),
                       reject=bool(spec.get("reject", False)),
                       max_activations=None if max_activations is None
                       else int(max_activations))


def build_world(scenario: dict, mutations: Mutations | None = None) -> ChainState:
    genesis = scenario["genesis"]
    params = GenesisParams.from_data(genesis.get("parameters", {}))
    if mutations is None:
        name = scenario.get("mutant")
        mutations = MUTANTS[name] if name else HEALTHY
    state = ChainState()
    hooks: list[tuple[str, ReceiveHook]] = []
    for account, spec in genesis["accounts"].items():
        if isinstance(spec, dict):
            state.fund(account, _amount(spec.get("balance", 0), account))
            if "hook" in spec:
                hooks.append((account, _parse_hook(account, spec["hook"])))
        else:
            state.fund(account, _amount(spec, account))
    for i, entry in enumerate(scenario["deployment"]):
        _deploy_entry(state, entry, params, mutations, i)
    for account, hook in hooks:
        state.set_receive_hook(account, hook)
    return state


def _deploy_entry(state: ChainState, entry: dict, params: GenesisParams,
                  mutations: Mutations, index: int) -> None:
    kind, mid, deployer = entry["kind"], entry["id"], entry["deployer"]
    args = entry.get("args", {})
    where = f"deployment[{index}]"
    try:
        if kind == "fractional_token":
            state.install_module(FractionalToken(
                mid, state, deployer, args["token_name"], args["symbol"],
                mutations=mutations))
        elif kind == "fungible_token":
            state.install_module(FungibleToken(
                mid, state, deployer, args["token_name"], args["symbol"]))
        elif kind == "nft_collection":
            state.install_module(NftCollection(
                mid, state, deployer, args["collection_name"]))
        elif kind == "vault":
            state.install_module(Vault(
                mid, state, deployer, args["collection"], args["fractions"],
                auction_duration=params.auction_duration,
                royalty_percent=params.royalty_percent, mutations=mutations))
        elif kind == "timelock":
            state.install_module(Timelock(mid, state, deployer,
                                          delay=params.timelock_delay))
        elif kind == "governance":
            state.install_module(Governance(
                mid, state, deployer, args["fractions"], args["vault"],
                args["timelock"], threshold_bps=params.proposal_threshold_bps,
                mutations=mutations))
            timelock = state.modules[args["timelock"]]
            timelock.bind_controller(mid)  # type: ignore[attr-defined]
            registration = state.transact(
                deployer, args["vault"], "set_governance_contract",
                {"governance": mid})
            if not registration.ok:
                raise ScenarioError(
                    f"{where}: vault registration failed: {registration.error}")
        elif kind == "market":
            state.install_module(Market(
                mid, state, deployer, args["token_a"], args["token_b"],
                fee_multiplier=params.fee_multiplier, mutations=mutations))
        else:
            raise ScenarioError(f"{where}: unknown kind {kind!r}")
    except KeyError as exc:
        raise ScenarioError(f"{where}: missing argument {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


# --------------------------------------------------------------------- #
# Execution
# --------------------------------------------------------------------- #

def run_scenario(scenario: dict, mutations: Mutations | None = None) -> ScenarioRun:
    state = build_world(scenario, mutations)
    run = ScenarioRun(scenario=scenario, state=state)
    for step, entry in enumerate(scenario["transactions"]):
        record = execute_entry(state, step, entry)
        run.records.append(record)
        expect = entry.get("expect", "success")
        expected = "success" if expect == "success" else expect["error"]
        if record.result != expected:
            raise ExpectationMismatch(step, expected, record.result)
    return run


def execute_entry(state: ChainState, step: int, entry: dict) -> TraceRecord:
    module, method = entry["call"].split(".", 1)
    args = _decode(entry.get("args", {}))
    value = _amount(entry.get("value", 0), f"transactions[{step}].value")
    advance = _amount(entry.get("advance_clock", 0),
                      f"transactions[{step}].advance_clock")
    if advance:
        state.advance_clock(advance)
    result = state.transact(entry["sender"], module, method, args, value=value)
    return TraceRecord(
        step=step, sender=entry["sender"], call=entry["call"], args=args,
        value=value, advance_clock=advance,
        result="success" if result.ok else (result.error or "error"),
        returned=result.value if result.ok else None,
        events=[e.as_data() for e in result.events], digest=state.digest())
