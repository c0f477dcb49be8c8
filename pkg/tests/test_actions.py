import jsonschema
import pytest

from gridmdp.actions import (
    ActionFormatError,
    Composite,
    DoNothing,
    SetLineStatus,
    action_from_dict,
    action_schema,
    action_to_dict,
    curtail,
    set_busbar,
    set_storage,
)

ROUND_TRIP = [
    DoNothing(),
    SetLineStatus(line="L03", status=False),
    set_busbar("S06", {"gen:GEN_WND1": 2, "line_to:L10": 1}),
    curtail({"GEN_SOL1": 0.25, "GEN_WND1": 1.0}),
    set_storage({"BAT1": -3.5}),
    Composite(curtail=curtail({"GEN_SOL1": 0.5}), storage=set_storage({"BAT2": 2.0})),
]


@pytest.mark.parametrize("action", ROUND_TRIP, ids=lambda a: type(a).__name__)
def test_dict_roundtrip(action):
    doc = action_to_dict(action)
    assert action_from_dict(doc) == action


@pytest.mark.parametrize("action", ROUND_TRIP, ids=lambda a: type(a).__name__)
def test_wire_documents_validate_against_schema(action):
    jsonschema.validate(action_to_dict(action), action_schema())


def test_malformed_documents_rejected():
    for doc in ({}, {"type": "warp"}, {"type": "set_line_status"}, "do_nothing",
                {"type": "curtail", "caps": {"G": "high"}}):
        with pytest.raises(ActionFormatError):
            action_from_dict(doc)


def test_schema_rejects_out_of_range_values():
    schema = action_schema()
    validator = jsonschema.Draft202012Validator(schema)
    bad = {"type": "curtail", "caps": {"GEN_SOL1": 1.2}}
    assert list(validator.iter_errors(bad))
    bad_bus = {"type": "set_busbar", "substation": "S01", "assignments": {"gen:G": 3}}
    assert list(validator.iter_errors(bad_bus))
