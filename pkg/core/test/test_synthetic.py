from hypothesis import given, settings
from hypothesis import strategies as st

from core.py.annotator import annotate_corpus, annotate_thread
from core.py.classifier import classify, load_models
from core.py.corpus import Message, Thread, dump_corpus, parse_corpus
from core.py.lexicon import SLOT_ORDER, SlotType, load_lexicon
from core.py.pipeline import DEFAULT_LEXICON, DEFAULT_MODELS
from core.py.synthetic import SLOT_PHRASES, generate_corpus, request_body

LEXICON = load_lexicon(DEFAULT_LEXICON.read_bytes())


def test_every_slot_has_a_phrase():
    assert set(SLOT_PHRASES) == set(SLOT_ORDER)


def test_generated_corpus_is_valid():
    corpus, truth = generate_corpus(n_threads=15, seed=3)
    assert len(corpus.threads) == 15
    assert set(truth) == {t.thread_id for t in corpus.threads}
    assert parse_corpus(dump_corpus(corpus)) == corpus


def test_generation_is_seeded():
    assert generate_corpus(n_threads=5, seed=11) == generate_corpus(n_threads=5, seed=11)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_annotator_recovers_generated_slots(seed):
    corpus, truth = generate_corpus(n_threads=4, seed=seed)
    for annotation in annotate_corpus(corpus, LEXICON):
        assert set(annotation.presence.present_slots()) == truth[annotation.thread_id]


@settings(max_examples=100)
@given(st.sets(st.sampled_from(SLOT_ORDER)))
def test_request_body_realizes_exactly_its_slots(slots):
    thread = Thread("t", (Message("t-req", request_body(slots)),))
    assert set(annotate_thread(thread, LEXICON).presence.present_slots()) == slots


def test_proverb_only_thread_is_an_exception():
    models = load_models(DEFAULT_MODELS.read_bytes(), lexicon=LEXICON)
    thread = Thread("t", (Message("t-req", request_body({SlotType.ProverbQuotation})),))
    assignment = classify(annotate_thread(thread, LEXICON), models)
    assert assignment.unclassifiable
    assert assignment.assigned == ()
