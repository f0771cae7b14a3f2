"""Tests for model parsing, validation and exact stepping."""

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from streettsm.benchmarks import benchmark_names, load_benchmark
from streettsm.model import DEFAULT_MODE, parse_model
from streettsm.syntax import SourceError

WALK = """
state_dim: 1
init: x = 0
disturbance: w finite { (1): 1/2, (0): 1/2 }
branch _ -> _:
  guard: x >= 0
  update: x' = x + 2*w - 1
branch _ -> _:
  guard: x < 0
  update: x' = x - 1
"""

POST_ONLY = """
vars: y
modes: pos neg
init: y = 3, mode = pos
disturbance: w finite { (1): 1/2, (0): 1/2 }
post pos:
  guard: true
  case 1/2 -> pos: y' = 4*y + 2
  case 1/2 -> neg: y' = 4*y + 2
post neg:
  guard: true
  case 1/2 -> neg: y' = y - 1
  case 1/2 -> pos: y' = y - 1
"""


def test_parse_minimal_model():
    m = parse_model(WALK)
    assert m.state_vars == ("x",) and m.modes == (DEFAULT_MODE,)
    assert m.init_state == (F(0),) and m.init_mode == DEFAULT_MODE
    assert m.disturbance.kind == "finite"
    assert m.disturbance.mean_vector() == (F(1, 2),)
    assert len(m.branches) == 2 and not m.guards_parameter_bearing


def test_step_walks_the_right_branch():
    m = parse_model(WALK)
    assert m.step((F(0),), DEFAULT_MODE, (F(1),)) == ((F(1),), DEFAULT_MODE)
    assert m.step((F(0),), DEFAULT_MODE, (F(0),)) == ((F(-1),), DEFAULT_MODE)
    assert m.step((F(-1),), DEFAULT_MODE, (F(1),)) == ((F(-2),), DEFAULT_MODE)


def test_step_frozen_oracles_from_corpus():
    # thermostat with affine feedback: one exact step from the setpoint
    t1 = load_benchmark("Temperature1").model
    nxt, mode = t1.step(
        (F(280),),
        t1.init_mode,
        (F(1),),
        control={"alpha": F(-1, 32), "beta": F(4787, 512)},
    )
    assert nxt == (F(718591, 2560),)

    # parameterized switching logic: guard decides the mode transition
    fmc = load_benchmark("FinMemoryControl").model
    kappa = {"l": F(1, 8), "m": F(14), "p": F(1, 2), "q": F(51), "alpha": F(56)}
    nxt, mode = fmc.step((F(50),), "b1", (F(1),), control=kappa)
    assert (nxt, mode) == ((F(107),), "b1")
    nxt, mode = fmc.step((F(50),), "b1", (F(0),), control=kappa)
    assert (nxt, mode) == ((F(106),), "b1")

    # two-variable system: both components update in one step
    grw = load_benchmark("GuaranteeRW").model
    nxt, mode = grw.step((F(3), F(1)), grw.init_mode, (F(1),))
    assert nxt == (F(14), F(1))

    # randomized parity flip through the middle band
    eon = load_benchmark("evenOrNegative").model
    nxt, mode = eon.step((F(0),), "ev", (F(1),))
    assert (nxt, mode) == ((F(1),), "od")


def test_step_requires_exactly_one_guard():
    # parameter-bearing guards skip the static cover check, so bad control
    # values can gap or overlap the partition; step must catch both
    text = """
state_dim: 1
init: x = 0
disturbance: w finite { (1): 1 }
control: k in [-1, 1]
branch _ -> _:
  guard: k*x <= 0
  update: x' = x
branch _ -> _:
  guard: k*x >= 1
  update: x' = x
"""
    m = parse_model(text)
    assert m.guards_parameter_bearing
    with pytest.raises(ValueError, match="no branch applicable"):
        m.step((F(1, 2),), DEFAULT_MODE, (F(1),), control={"k": F(1)})
    overlap = parse_model(text.replace("k*x >= 1", "k*x >= 0"))
    with pytest.raises(ValueError, match="guard cover violated"):
        overlap.step((F(0),), DEFAULT_MODE, (F(1),), control={"k": F(1)})


def test_corpus_parses_with_expected_flags():
    for name in benchmark_names(include_extras=True):
        b = load_benchmark(name)
        assert b.model.state_dim in (1, 2)
        flagged = b.model.guards_parameter_bearing
        assert flagged == (name == "FinMemoryControl")


def test_guard_overlap_is_rejected_with_witness():
    bad = WALK.replace("guard: x < 0", "guard: x <= 0")
    with pytest.raises(SourceError) as e:
        parse_model(bad)
    assert "overlap" in str(e.value) and "(Fraction(0, 1),)" in str(e.value)


def test_guard_gap_is_rejected_with_region():
    bad = WALK.replace("guard: x >= 0", "guard: x > 0")
    with pytest.raises(SourceError) as e:
        parse_model(bad)
    assert "do not cover" in str(e.value)


def test_strict_boundaries_partition_exactly():
    # complementary strict/non-strict pairs pass the exact cover check
    parse_model(WALK.replace("x >= 0", "x >= 0").replace("x < 0", "x < 0"))
    both_strict = WALK.replace("x >= 0", "x > 0")
    with pytest.raises(SourceError):
        parse_model(both_strict)


@given(
    st.fractions(min_value=-3, max_value=3, max_denominator=4),
    st.fractions(min_value=F(1, 4), max_value=3, max_denominator=4),
)
def test_threshold_partitions_cover_iff_exact(t, gap):
    u = t + gap
    tmpl = """
state_dim: 1
init: x = 0
disturbance: w finite { (1): 1 }
branch _ -> _:
  guard: x < %s
  update: x' = x
branch _ -> _:
  guard: %s <= x and x < %s
  update: x' = x
branch _ -> _:
  guard: x >= %s
  update: x' = x
"""

    def lit(q):
        return f"({q.numerator}/{q.denominator})"

    good = tmpl % (lit(t), lit(t), lit(u), lit(u))
    parse_model(good)  # exact three-interval partition
    gap_text = good.replace(f"{lit(t)} <= x", f"{lit(t)} < x", 1)
    with pytest.raises(SourceError, match="do not cover"):
        parse_model(gap_text)
    overlap = good.replace(f"x < {lit(t)}", f"x <= {lit(t)}", 1)
    with pytest.raises(SourceError, match="overlap"):
        parse_model(overlap)


@given(st.fractions(min_value=-4, max_value=4, max_denominator=8))
def test_step_matches_piecewise_oracle(x):
    # independent piecewise formula for the parity/negative walk
    m = load_benchmark("evenOrNegative").model
    for mode in ("ev", "od"):
        for w in (F(0), F(1)):
            nxt, nmode = m.step((x,), mode, (w,))
            if x >= F(1, 2):
                want = (x + 1, {"ev": "od", "od": "ev"}[mode])
            elif x <= F(-1, 2):
                want = (x - 2, mode)
            elif mode == "ev":
                want = (2 * w - 1, "od")
            else:
                want = (x + 1, "ev")
            assert (nxt[0], nmode) == want


def test_probability_validation():
    bad_sum = WALK.replace("(1): 1/2, (0): 1/2", "(1): 1/2, (0): 1/3")
    with pytest.raises(SourceError, match="sum != 1"):
        parse_model(bad_sum)
    bad_sign = WALK.replace("(1): 1/2, (0): 1/2", "(1): 3/2, (0): -1/2")
    with pytest.raises(SourceError, match="positive"):
        parse_model(bad_sign)


def test_box_disturbance_validation():
    box = WALK.replace(
        "w finite { (1): 1/2, (0): 1/2 }",
        "w box { lo = -1, hi = 1, mean = 1/4 }",
    )
    m = parse_model(box)
    assert m.disturbance.kind == "box"
    assert m.disturbance.mean_vector() == (F(1, 4),)
    bad = box.replace("mean = 1/4", "mean = 2")
    with pytest.raises(SourceError, match="lo <= mean <= hi"):
        parse_model(bad)


def test_missing_declarations():
    with pytest.raises(SourceError, match="missing disturbance"):
        parse_model("state_dim: 1\ninit: x = 0\nbranch _ -> _:\n"
                    "  guard: true\n  update: x' = x\n")
    with pytest.raises(SourceError, match="missing init"):
        parse_model("state_dim: 1\n"
                    "disturbance: w finite { (1): 1 }\n"
                    "branch _ -> _:\n  guard: true\n  update: x' = x\n")
    with pytest.raises(SourceError, match="no branches"):
        parse_model("state_dim: 1\ninit: x = 0\n"
                    "disturbance: w finite { (1): 1 }\n")
    with pytest.raises(SourceError, match="state_dim 2 != 1"):
        parse_model("state_dim: 2\nvars: x\ninit: x = 0\n"
                    "disturbance: w finite { (1): 1 }\n"
                    "branch _ -> _:\n  guard: true\n  update: x' = x\n")


def test_name_collisions_and_duplicates():
    clash = WALK.replace("disturbance: w", "disturbance: x")
    with pytest.raises(SourceError, match="name used twice"):
        parse_model(clash)
    dup = WALK + "control: k in [0, 1]\ncontrol: k in [0, 2]\n"
    with pytest.raises(SourceError, match="duplicate control"):
        parse_model(dup)


def test_update_outside_block_is_an_error():
    with pytest.raises(SourceError, match="outside a branch/post block"):
        parse_model("state_dim: 1\nupdate: x' = x\n")


def test_post_only_model_and_post_step():
    m = parse_model(POST_ONLY)
    assert not m.branches and len(m.manual_post) == 2
    # cumulative-probability sampling: u below 1/2 takes the first case
    assert m.post_step((F(3),), "pos", F(1, 4)) == ((F(14),), "pos")
    assert m.post_step((F(3),), "pos", F(3, 4)) == ((F(14),), "neg")
    assert m.post_step((F(0),), "neg", F(999, 1000)) == ((F(-1),), "pos")
    with pytest.raises(ValueError, match="u must lie"):
        m.post_step((F(3),), "pos", F(1))


def test_post_cover_validation():
    gap = POST_ONLY.replace("guard: true\n  case 1/2 -> neg: y' = y - 1",
                            "guard: y > 0\n  case 1/2 -> neg: y' = y - 1")
    with pytest.raises(SourceError, match="does not cover"):
        parse_model(gap)
    bad_sum = POST_ONLY.replace("case 1/2 -> pos: y' = 4*y + 2",
                                "case 1/3 -> pos: y' = 4*y + 2", 1)
    with pytest.raises(SourceError, match="sum != 1"):
        parse_model(bad_sum)


def test_side_constraints_parse_over_controls_only():
    text = WALK + "control: kappa in [-4, 4]\n" + "constraint: 2*kappa <= 1\n"
    m = parse_model(text)
    assert len(m.side_constraints) == 1
    assert m.side_constraints[0].holds({"kappa": F(1, 2)}, {})
    assert not m.side_constraints[0].holds({"kappa": F(1)}, {})
    with pytest.raises(SourceError, match="unknown name"):
        parse_model(WALK + "constraint: x <= 1\n")
