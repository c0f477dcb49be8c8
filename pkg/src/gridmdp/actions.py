"""Agent actions and their JSON wire format.

The action vocabulary is a tagged union: do nothing, switch a line, reassign
a substation's elements between its two busbars, cap renewable output, set
storage power, or combine the last two.  The JSON encoding mirrors the union
one-to-one and is pinned by ``schemas/action.schema.json`` (the contract
shared with external clients).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources


class ActionFormatError(ValueError):
    """Raised when an action document cannot be mapped onto the union."""


@dataclass(frozen=True)
class DoNothing:
    pass


@dataclass(frozen=True)
class SetLineStatus:
    line: str
    status: bool


@dataclass(frozen=True)
class SetBusbar:
    substation: str
    assignments: tuple  # ((element_key, busbar), ...) sorted by key


@dataclass(frozen=True)
class Curtail:
    caps: tuple  # ((renewable gen id, ratio in [0, 1]), ...) sorted by id


@dataclass(frozen=True)
class SetStorage:
    power_mw: tuple  # ((storage id, signed MW, + charging), ...) sorted by id


@dataclass(frozen=True)
class Composite:
    curtail: Curtail | None = None
    storage: SetStorage | None = None


Action = DoNothing | SetLineStatus | SetBusbar | Curtail | SetStorage | Composite


def curtail(caps: dict) -> Curtail:
    return Curtail(caps=tuple(sorted((str(k), float(v)) for k, v in caps.items())))


def set_storage(power_mw: dict) -> SetStorage:
    return SetStorage(power_mw=tuple(sorted((str(k), float(v)) for k, v in power_mw.items())))


def set_busbar(substation: str, assignments: dict) -> SetBusbar:
    return SetBusbar(substation=substation,
                     assignments=tuple(sorted((str(k), int(v)) for k, v in assignments.items())))


def action_to_dict(action: Action) -> dict:
    if isinstance(action, DoNothing):
        return {"type": "do_nothing"}
    if isinstance(action, SetLineStatus):
        return {"type": "set_line_status", "line": action.line, "status": bool(action.status)}
    if isinstance(action, SetBusbar):
        return {"type": "set_busbar", "substation": action.substation,
                "assignments": {k: v for k, v in action.assignments}}
    if isinstance(action, Curtail):
        return {"type": "curtail", "caps": {k: v for k, v in action.caps}}
    if isinstance(action, SetStorage):
        return {"type": "set_storage", "power_mw": {k: v for k, v in action.power_mw}}
    if isinstance(action, Composite):
        out: dict = {"type": "composite"}
        if action.curtail is not None:
            out["caps"] = {k: v for k, v in action.curtail.caps}
        if action.storage is not None:
            out["power_mw"] = {k: v for k, v in action.storage.power_mw}
        return out
    raise ActionFormatError(f"not an action: {action!r}")


def action_from_dict(doc: dict) -> Action:
    if not isinstance(doc, dict) or "type" not in doc:
        raise ActionFormatError("action document must be an object with a 'type' field")
    kind = doc["type"]
    try:
        if kind == "do_nothing":
            return DoNothing()
        if kind == "set_line_status":
            return SetLineStatus(line=str(doc["line"]), status=bool(doc["status"]))
        if kind == "set_busbar":
            return set_busbar(str(doc["substation"]), dict(doc["assignments"]))
        if kind == "curtail":
            return curtail(dict(doc["caps"]))
        if kind == "set_storage":
            return set_storage(dict(doc["power_mw"]))
        if kind == "composite":
            return Composite(
                curtail=curtail(dict(doc["caps"])) if "caps" in doc else None,
                storage=set_storage(dict(doc["power_mw"])) if "power_mw" in doc else None,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ActionFormatError(f"malformed {kind!r} action: {exc}") from exc
    raise ActionFormatError(f"unknown action type {kind!r}")


def action_schema() -> dict:
    text = resources.files("gridmdp.schemas").joinpath("action.schema.json").read_text()
    return json.loads(text)
