import random
from pathlib import Path

from faker import Faker

from core.py.corpus import Corpus, Message, Thread, dump_corpus
from core.py.lexicon import REACTION_ORDER, SLOT_ORDER, ReactionType, SlotType

# One phrase per slot; each phrase realizes its own slot and no other with
# the default French lexicon.
SLOT_PHRASES = {
    SlotType.RequestBeneficiary: "Je m'adresse à tous.",
    SlotType.OpeningGreeting: "Bonjour,",
    SlotType.AddressTerm: "Je vous écris, les amis.",
    SlotType.ForumActivityDescription: "Voici mon premier post.",
    SlotType.Identity: "J'ai 31 ans.",
    SlotType.ProblemPresentation: "Voici mon problème.",
    SlotType.ResolutionFailure: "J'ai tout essayé.",
    SlotType.PsychologicalState: "Je me sens perdue.",
    SlotType.HealthState: "J'ai des douleurs au dos.",
    SlotType.RequestFormulation: "Savez-vous comment faire ?",
    SlotType.ExpectedBenefit: "Cela me ferait du bien.",
    SlotType.ExchangeModalities: "Répondez-moi en mp.",
    SlotType.CounterGiftWish: "À charge de revanche.",
    SlotType.AnticipatoryThanks: "Merci d'avance.",
    SlotType.Closing: "Bonne journée",
    SlotType.Signature: "-- Camille",
    SlotType.ProverbQuotation: "Comme on dit, petit à petit l'oiseau fait son nid.",
    SlotType.VisualFormatting: ":)",
}

REACTION_PHRASES = {
    ReactionType.EncouragementCompliment: "Bon courage !",
    ReactionType.CriticismDisagreement: "Je ne suis pas d'accord.",
    ReactionType.AdviceInformation: "Je te conseille de consulter.",
    ReactionType.SituationEvaluationFollowupQuestion: "Depuis quand ?",
    ReactionType.ExpertiseEvaluationSharedExperience: "Moi aussi.",
}

# anchored slots must sit at the start or the end of the body
_LEADING = (SlotType.OpeningGreeting,)
_TRAILING = (SlotType.Closing,)


def request_body(slots):
    """Request text realizing exactly `slots`: greeting first, closing then signature last."""
    slots = set(slots)
    parts = [SLOT_PHRASES[s] for s in _LEADING if s in slots]
    parts += [SLOT_PHRASES[s] for s in SLOT_ORDER
              if s in slots and s not in _LEADING and s not in _TRAILING and s is not SlotType.Signature]
    parts += [SLOT_PHRASES[s] for s in _TRAILING if s in slots]
    body = " ".join(parts)
    if SlotType.Signature in slots:
        body = f"{body}\n{SLOT_PHRASES[SlotType.Signature]}" if body else SLOT_PHRASES[SlotType.Signature]
    return body


def reply_body(reactions):
    return " ".join(REACTION_PHRASES[r] for r in REACTION_ORDER if r in set(reactions))


def generate_corpus(n_threads=20, seed=0, max_replies=3, slot_probability=0.4):
    """
    Random corpus whose requests realize random slot subsets.

    Args:
        n_threads (int): Number of threads.
        seed (int): Seeds both the slot draws and the Faker author names.
        max_replies (int): Upper bound on replies per thread.
        slot_probability (float): Chance that each slot is realized.

    Returns:
        tuple[Corpus, dict]: The corpus and, per thread id, the frozenset of
            slots its request realizes.
    """
    rng = random.Random(seed)
    fake = Faker("fr_FR")
    fake.seed_instance(seed)

    threads = []
    truth = {}
    for i in range(1, n_threads + 1):
        thread_id = f"syn-{i}"
        slots = frozenset(s for s in SLOT_ORDER if rng.random() < slot_probability)
        truth[thread_id] = slots

        request = Message(f"{thread_id}-req", request_body(slots), author=fake.first_name())
        messages = [request]
        for j in range(1, rng.randint(0, max_replies) + 1):
            # replies attach to the request or to an earlier reply
            parent = rng.choice(messages)
            reactions = [r for r in REACTION_ORDER if rng.random() < 0.5]
            messages.append(Message(f"{thread_id}-r{j}", reply_body(reactions), author=fake.first_name(),
                                    parent_id=parent.message_id))
        threads.append(Thread(thread_id, tuple(messages)))

    return Corpus(corpus_id=f"synthetic-{seed}", threads=tuple(threads)), truth


if __name__ == "__main__":
    directory = Path("./data/generated/")
    directory.mkdir(parents=True, exist_ok=True)
    corpus, _ = generate_corpus(n_threads=200, seed=2007)
    (directory / "corpus.json").write_bytes(dump_corpus(corpus))
    print(f"Wrote {len(corpus.threads)} threads to {directory / 'corpus.json'}")
