import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.py.annotator import PresenceVector, ReactionProfile, ThreadAnnotation, annotate_corpus, annotate_thread
from core.py.classifier import LABEL_ORDER, CategoryAssignment, classify_all, exceptions, load_models
from core.py.corpus import Message, Thread, parse_corpus
from core.py.errors import DuplicateId, InvalidThresholds, MissingScript, ParseError, UnknownThread
from core.py.gridlab import (
    aggregate,
    build_grid,
    contrast,
    grid_to_csv,
    grid_to_json,
    grid_to_markdown,
    induce_scripts,
    read_grid_csv,
    render_report,
    scripts_to_json,
    validate_scripts,
    validation_to_json,
)
from core.py.lexicon import SLOT_ORDER, SlotType, load_lexicon
from core.py.pipeline import DATA_DIR, DEFAULT_LEXICON, DEFAULT_MODELS

S = SlotType
Emo, Exp, Eval, Info, Adv, Tang = LABEL_ORDER

LEXICON = load_lexicon(DEFAULT_LEXICON.read_bytes())
MODELS = load_models(DEFAULT_MODELS.read_bytes(), lexicon=LEXICON)
GOLDEN = (DATA_DIR / "grid_fixture" / "golden_grid.csv").read_bytes()


def analyse(name):
    corpus = parse_corpus((DATA_DIR / "grid_fixture" / name).read_bytes())
    annotations = annotate_corpus(corpus, LEXICON)
    return annotations, classify_all(annotations, MODELS)


ANNOTATIONS, ASSIGNMENTS = analyse("corpus.json")


def fixture_scripts(theta_mandatory=Fraction(4, 5), theta_optional=Fraction(2, 5)):
    supports = aggregate(build_grid(ANNOTATIONS), ASSIGNMENTS)
    return induce_scripts(supports, theta_mandatory, theta_optional)


def bare_annotation(thread_id, slots):
    presence = PresenceVector.from_slots(thread_id, slots)
    return ThreadAnnotation(thread_id, f"{thread_id}-req", (), (), presence, ReactionProfile(thread_id, (0,) * 5))


def test_fixture_reproduces_golden_grid():
    grid = build_grid(ANNOTATIONS)
    assert grid.shape == (18, 7)
    assert grid.thread_ids == ["fil-1", "fil-2", "fil-3", "fil-4", "fil-5", "fil-6", "fil-8"]
    assert grid == read_grid_csv(GOLDEN)
    assert grid_to_csv(grid) == GOLDEN
    assert grid.cell(S.ExpectedBenefit, "fil-1")
    assert not grid.cell(S.ExpectedBenefit, "fil-2")
    assert sum(grid.column("fil-2")) == 11


def test_empty_grid():
    grid = build_grid([])
    assert grid.shape == (18, 0)
    assert grid.thread_ids == []


def test_duplicate_column():
    with pytest.raises(DuplicateId):
        build_grid([bare_annotation("t", []), bare_annotation("t", [S.Closing])])


def test_grid_renderings():
    grid = build_grid(ANNOTATIONS)
    doc = json.loads(grid_to_json(grid))
    assert doc["threads"][0] == "fil-1"
    assert [row["slot"] for row in doc["rows"]] == [s.value for s in SLOT_ORDER]
    assert doc["rows"][10]["cells"] == [True, False, False, False, False, False, False]

    lines = grid_to_markdown(grid).decode("utf-8").splitlines()
    assert lines[0] == "| slot | fil-1 | fil-2 | fil-3 | fil-4 | fil-5 | fil-6 | fil-8 |"
    assert len(lines) == 20


def test_bad_grid_csv():
    with pytest.raises(ParseError):
        read_grid_csv(GOLDEN.replace(b"Identity,0,1", b"Identity,0,2"))
    with pytest.raises(ParseError):
        read_grid_csv(GOLDEN.replace(b"slot,", b"row,", 1))
    with pytest.raises(ParseError):
        read_grid_csv(b"\n".join(GOLDEN.splitlines()[:-1]) + b"\n")


def test_aggregate_experience_sharing():
    supports = {cs.label: cs for cs in aggregate(build_grid(ANNOTATIONS), ASSIGNMENTS)}
    experience = supports[Exp]
    assert experience.n == 4
    assert experience.support[S.ProblemPresentation] == 1
    assert experience.support[S.OpeningGreeting] == Fraction(3, 4)
    assert experience.support[S.Identity] == Fraction(1, 4)
    assert experience.support[S.ExpectedBenefit] == 0
    assert experience.support[S.PsychologicalState] == Fraction(3, 4)
    assert experience.support[S.AddressTerm] == Fraction(3, 4)
    assert experience.support[S.ForumActivityDescription] == Fraction(1, 2)

    assert supports[Emo].n == 1
    assert supports[Emo].support[S.ExpectedBenefit] == 1
    assert supports[Info].n == 2
    assert [cs.n for cs in supports.values()] == [1, 4, 1, 2, 1, 1]


def test_aggregate_without_threads():
    grid = build_grid([bare_annotation("t", [S.Closing])])
    assignment = CategoryAssignment("t", {}, (Adv,), False)
    supports = {cs.label: cs for cs in aggregate(grid, [assignment])}
    assert supports[Emo].n == 0
    assert supports[Emo].support is None
    assert supports[Adv].support[S.Closing] == 1


def test_aggregate_unknown_thread():
    grid = build_grid([bare_annotation("t", [])])
    with pytest.raises(UnknownThread):
        aggregate(grid, [CategoryAssignment("elsewhere", {}, (Adv,), False)])


def test_induced_scripts():
    scripts = {s.label: s for s in fixture_scripts()}
    experience = scripts[Exp]
    assert list(experience.mandatory) == [S.RequestBeneficiary, S.ProblemPresentation, S.RequestFormulation]
    assert list(experience.optional) == [
        S.OpeningGreeting,
        S.AddressTerm,
        S.ForumActivityDescription,
        S.ResolutionFailure,
        S.PsychologicalState,
        S.Closing,
    ]
    emotional = scripts[Emo]
    assert list(emotional.mandatory) == [
        S.RequestBeneficiary,
        S.OpeningGreeting,
        S.AddressTerm,
        S.ForumActivityDescription,
        S.PsychologicalState,
        S.RequestFormulation,
        S.ExpectedBenefit,
        S.Signature,
    ]
    assert emotional.optional == ()
    assert not any(s.insufficient_data for s in scripts.values())


def test_zero_thresholds_make_every_slot_mandatory():
    for script in fixture_scripts(0, 0):
        assert list(script.mandatory) == list(SLOT_ORDER)
        assert script.optional == ()


def test_empty_category_script():
    grid = build_grid([bare_annotation("t", [S.Closing])])
    supports = aggregate(grid, [CategoryAssignment("t", {}, (Adv,), False)])
    scripts = {s.label: s for s in induce_scripts(supports)}
    assert scripts[Emo].insufficient_data
    assert scripts[Emo].mandatory == () and scripts[Emo].optional == ()
    assert scripts[Adv].mandatory == (S.Closing,)


def test_script_thresholds_out_of_order():
    supports = aggregate(build_grid(ANNOTATIONS), ASSIGNMENTS)
    with pytest.raises(InvalidThresholds):
        induce_scripts(supports, Fraction(1, 4), Fraction(1, 2))
    with pytest.raises(InvalidThresholds):
        induce_scripts(supports, Fraction(6, 5), Fraction(1, 2))


def test_self_validation():
    report = validate_scripts(fixture_scripts(), ANNOTATIONS, ASSIGNMENTS, Fraction(4, 5))
    assert len(report.entries) == 10
    assert all(e.coverage == 1 and e.conforms for e in report.entries)
    assert all(rate == 1 for rate in report.conformance.values())
    assert report.skipped == ()


def test_holdout_validation():
    holdout, assignments = analyse("holdout.json")
    report = validate_scripts(fixture_scripts(), holdout, assignments, Fraction(4, 5))

    (h1,) = report.entries_for("h-1")
    assert h1.label is Exp and h1.coverage == 1 and h1.conforms
    (h2,) = report.entries_for("h-2")
    assert h2.label is Emo and h2.coverage == Fraction(3, 8) and not h2.conforms
    assert report.entries_for("h-3") == []
    assert report.skipped == ("h-3",)
    assert exceptions(assignments) == ["h-3"]

    assert report.conformance[Exp] == 1
    assert report.conformance[Emo] == 0
    assert all(report.conformance[label] is None for label in (Eval, Info, Adv, Tang))

    doc = json.loads(validation_to_json(report, exceptions(assignments)))
    assert doc["exceptions"] == ["h-3"]
    assert doc["conformance"]["EmotionalSupport"] == {"value": 0.0, "exact": "0/1"}
    assert doc["conformance"]["Advice"] is None


def test_validation_errors():
    scripts = fixture_scripts()
    with pytest.raises(MissingScript):
        validate_scripts([s for s in scripts if s.label is not Emo], ANNOTATIONS, ASSIGNMENTS)
    with pytest.raises(UnknownThread):
        validate_scripts(scripts, ANNOTATIONS, ASSIGNMENTS[1:])
    with pytest.raises(InvalidThresholds):
        validate_scripts(scripts, ANNOTATIONS, ASSIGNMENTS, Fraction(3, 2))


def test_empty_mandatory_list_gives_full_coverage():
    grid = build_grid([bare_annotation("t", [S.Closing])])
    supports = aggregate(grid, [CategoryAssignment("t", {}, (Adv,), False)])
    scripts = induce_scripts(supports, 1, Fraction(1, 2))
    held = bare_annotation("h", [])
    report = validate_scripts(scripts, [held], [CategoryAssignment("h", {}, (Emo,), False)])
    assert report.entries[0].coverage == 1
    assert report.entries[0].insufficient_data


def test_contrast():
    result = contrast(fixture_scripts())
    assert result["distinctive"][Emo] == [S.ExpectedBenefit]
    assert result["distinctive"][Exp] == [S.ResolutionFailure]
    assert result["distinctive"][Eval] == [S.HealthState, S.ProverbQuotation]
    assert result["never_observed"] == [S.Identity, S.ExchangeModalities, S.CounterGiftWish, S.VisualFormatting]
    assert result["membership"][S.Signature] == [Emo, Eval]


def test_report():
    scripts = fixture_scripts()
    supports = aggregate(build_grid(ANNOTATIONS), ASSIGNMENTS)
    text = render_report(scripts, supports, "grid_fixture").decode("utf-8")
    assert text.startswith("# Request scripts: grid_fixture")
    assert "## ExperienceSharing (n = 4)" in text
    assert "| ResolutionFailure | 50% |" in text
    # zero-support slots keep their row
    assert "| Identity | 0% |" in text
    assert text.count("| ExchangeModalities | 0% |") == 6
    assert "- Only the EmotionalSupport script contains ExpectedBenefit." in text
    assert "Never observed in any script: Identity, ExchangeModalities, CounterGiftWish, VisualFormatting." in text

    doc = json.loads(scripts_to_json(scripts))
    assert doc["scripts"][1]["mandatory"] == ["RequestBeneficiary", "ProblemPresentation", "RequestFormulation"]
    assert doc["scripts"][0]["theta_mandatory"] == {"value": 0.8, "exact": "4/5"}


# random grids and assignments checked against a direct recount

@st.composite
def labelled_grids(draw):
    n_threads = draw(st.integers(min_value=0, max_value=8))
    annotations = []
    assignments = []
    for i in range(n_threads):
        slots = draw(st.sets(st.sampled_from(SLOT_ORDER)))
        labels = draw(st.sets(st.sampled_from(LABEL_ORDER)))
        annotations.append(bare_annotation(f"t{i}", slots))
        assignments.append(CategoryAssignment(f"t{i}", {}, tuple(l for l in LABEL_ORDER if l in labels), not labels))
    return annotations, assignments


thresholds = st.tuples(st.fractions(min_value=0, max_value=1), st.fractions(min_value=0, max_value=1)).map(
    lambda pair: (max(pair), min(pair)))


@settings(max_examples=100, deadline=None)
@given(labelled_grids(), thresholds)
def test_scripts_match_direct_recount(case, theta):
    annotations, assignments = case
    theta_mandatory, theta_optional = theta
    supports = aggregate(build_grid(annotations), assignments)
    scripts = {s.label: s for s in induce_scripts(supports, theta_mandatory, theta_optional)}

    for label in LABEL_ORDER:
        members = [a for a, c in zip(annotations, assignments) if label in c.assigned]
        script = scripts[label]
        assert script.n == len(members)
        if not members:
            assert script.insufficient_data
            continue
        share = {s: Fraction(sum(m.presence[s] for m in members), len(members)) for s in SLOT_ORDER}
        assert list(script.mandatory) == [s for s in SLOT_ORDER if share[s] >= theta_mandatory]
        assert list(script.optional) == [s for s in SLOT_ORDER if theta_optional <= share[s] < theta_mandatory]
        assert not set(script.mandatory) & set(script.optional)


@settings(max_examples=100, deadline=None)
@given(labelled_grids(), st.fractions(min_value=0, max_value=1), st.fractions(min_value=0, max_value=1))
def test_raising_theta_never_adds_mandatory_slots(case, a, b):
    annotations, assignments = case
    supports = aggregate(build_grid(annotations), assignments)
    low = induce_scripts(supports, min(a, b), 0)
    high = induce_scripts(supports, max(a, b), 0)
    for lo, hi in zip(low, high):
        assert set(hi.mandatory) <= set(lo.mandatory)


@settings(max_examples=100, deadline=None)
@given(labelled_grids())
def test_grid_csv_round_trip(case):
    annotations, _ = case
    grid = build_grid(annotations)
    assert read_grid_csv(grid_to_csv(grid)) == grid


@settings(max_examples=100, deadline=None)
@given(labelled_grids(), thresholds, st.fractions(min_value=0, max_value=1))
def test_raising_optional_threshold_never_grows_scripts(case, theta, c):
    annotations, assignments = case
    theta_mandatory = theta[0]
    low, high = sorted([theta[1], min(c, theta_mandatory)])
    supports = aggregate(build_grid(annotations), assignments)
    loose = induce_scripts(supports, theta_mandatory, low)
    tight = induce_scripts(supports, theta_mandatory, high)
    for lo, hi in zip(loose, tight):
        assert set(hi.mandatory) | set(hi.optional) <= set(lo.mandatory) | set(lo.optional)
        assert hi.mandatory == lo.mandatory


@settings(max_examples=100, deadline=None)
@given(labelled_grids(), st.sets(st.sampled_from(SLOT_ORDER)), st.sampled_from(SLOT_ORDER), st.sampled_from(LABEL_ORDER))
def test_adding_a_thread_never_lowers_its_slots_support(case, extra_slots, slot, label):
    annotations, assignments = case
    before = {cs.label: cs for cs in aggregate(build_grid(annotations), assignments)}
    added = bare_annotation("extra", extra_slots | {slot})
    after = {
        cs.label: cs
        for cs in aggregate(build_grid(annotations + [added]), assignments + [CategoryAssignment("extra", {}, (label,), False)])
    }
    assert after[label].n == before[label].n + 1
    if before[label].support is None:
        assert after[label].support[slot] == 1
    else:
        assert after[label].support[slot] >= before[label].support[slot]


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_column_order_does_not_change_supports(data):
    annotations, assignments = data.draw(labelled_grids())
    shuffled = data.draw(st.permutations(annotations))
    reassigned = data.draw(st.permutations(assignments))
    expected = aggregate(build_grid(annotations), assignments)
    assert aggregate(build_grid(shuffled), reassigned) == expected
    assert aggregate(build_grid(shuffled), assignments) == expected


# annotated threads built from cue fragments, grid cells recounted from the raw spans

FRAGMENTS = [
    "Bonjour à tous,",
    "voici mon problème : je dors mal.",
    "J'ai tout essayé.",
    "J'ai 33 ans.",
    "je me sens seule",
    "Quelqu'un a déjà vécu ça ?",
    "Comme dit le proverbe, après la pluie vient le beau temps.",
    "Merci d'avance",
    "Bon courage !",
    "Bises",
    "lol :)",
    "rien de spécial",
]

bodies = st.lists(st.sampled_from(FRAGMENTS), max_size=6).map(" ".join)


@st.composite
def annotated_threads(draw):
    annotations = []
    for i in range(draw(st.integers(min_value=0, max_value=5))):
        request = Message(f"t{i}-req", draw(bodies))
        replies = [Message(f"t{i}-r{j}", draw(bodies), parent_id=request.message_id)
                   for j in range(draw(st.integers(min_value=0, max_value=3)))]
        annotations.append(annotate_thread(Thread(f"t{i}", (request, *replies)), LEXICON))
    return annotations


@settings(max_examples=100, deadline=None)
@given(annotated_threads())
def test_grid_cells_recount_request_spans(annotations):
    grid = build_grid(annotations)
    for a in annotations:
        spans = {s.slot for s in a.slot_annotations if s.message_id == a.request_id}
        for slot in SLOT_ORDER:
            assert grid.cell(slot, a.thread_id) == (slot in spans)
