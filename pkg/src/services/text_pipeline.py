"""Input/output phrase extraction from CVE descriptions: priming, TF-IDF, TextRank, pairing."""

import re
import threading
from collections.abc import Iterable, Mapping

import networkx as nx
import structlog
from nltk.stem.porter import PorterStemmer
from sklearn.feature_extraction.text import CountVectorizer, TfidfTransformer

from src.core.config import ExtractionConfig
from src.core.models import IoPair, PosClass, PrimedCorpus, PrimedDocument, RankedPhrase

logger = structlog.get_logger(__name__)

_NON_ALNUM = re.compile(r"[^a-z0-9]+")

# Closed-class words and light verbs. Never candidates, always non_noun.
STOP_WORDS = frozenset(
    """
    a an the this that these those some any each every all both either neither no
    of in on at by for from to with within without into onto over under via through
    across after before between against during upon about above below than as per
    i you he she it we they me him her us them its their his our your who whom whose
    which what when where why how whether
    and or but nor so yet if then else also not only just such other another same
    is are was were be been being am do does did has have had having
    can could may might must shall should will would
    allow allows allowed lead leads cause causes use uses used permit permits enable
    enables make makes contain contains exist exists affect affects obtain obtains gain
    gains execute executes conduct conducts perform performs send sends
    there here more most less least very
    """.split()
)

# Attack actions: candidates that head an input phrase.
ACTION_WORDS = frozenset(
    word + suffix
    for word in (
        "attack",
        "bypass",
        "eavesdrop",
        "exploit",
        "forge",
        "hijack",
        "impersonate",
        "inject",
        "intercept",
        "overflow",
        "rebind",
        "replay",
        "sniff",
        "spoof",
        "tamper",
        "trigger",
    )
    for suffix in ("", "s")
)

NOUN_SUFFIXES = ("tion", "ment", "ness", "ity", "er", "or", "ism", "ware", "file", "api")
NON_NOUN_SUFFIXES = ("ing", "ed", "ly", "ize")


class Stemmer:
    """Shared Porter stemmer (original 1980 rules), created on first use."""

    _stemmer: PorterStemmer | None = None
    _lock = threading.Lock()

    @classmethod
    def get(cls) -> PorterStemmer:
        if cls._stemmer is None:
            with cls._lock:
                if cls._stemmer is None:
                    cls._stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
        return cls._stemmer

    @classmethod
    def stem(cls, token: str) -> str:
        # Porter can strip a short token to nothing; keep the surface then
        return cls.get().stem(token) or token


def tokenize(text: str) -> list[str]:
    """Lowercase, replace non-alphanumerics with spaces, split on whitespace."""
    return _NON_ALNUM.sub(" ", text.lower()).split()


def stem_tokens(text: str) -> list[str]:
    return [Stemmer.stem(token) for token in tokenize(text)]


def prime(raw_descriptions: Iterable[tuple[str, str]]) -> PrimedCorpus:
    """
    Prime raw descriptions into a stemmed corpus.

    Args:
        raw_descriptions: (cve_id, description text) pairs

    Returns:
        PrimedCorpus with aligned surface tokens and the stem -> surfaces map
    """
    documents: list[PrimedDocument] = []
    stem_map: dict[str, set[str]] = {}

    for cve_id, text in raw_descriptions:
        surfaces = tokenize(text)
        tokens = [Stemmer.stem(surface) for surface in surfaces]
        for stem, surface in zip(tokens, surfaces, strict=True):
            stem_map.setdefault(stem, set()).add(surface)
        document = PrimedDocument(cve_id=cve_id, tokens=tokens, surfaces=surfaces)
        if document.empty:
            logger.warning("Description primed to no tokens", cve_id=cve_id)
        documents.append(document)

    return PrimedCorpus(documents=documents, stem_map=stem_map)


# =============================================================================
# TF-IDF
# =============================================================================


def _passthrough(tokens: list[str]) -> list[str]:
    return tokens


def tfidf_scores(corpus: PrimedCorpus) -> dict[str, dict[str, float]]:
    """tf * idf per token, with tf the raw count and idf = ln(N / df)."""
    if not any(doc.tokens for doc in corpus.documents):
        return {doc.cve_id: {} for doc in corpus.documents}

    vectorizer = CountVectorizer(analyzer=_passthrough, lowercase=False)
    counts = vectorizer.fit_transform([doc.tokens for doc in corpus.documents]).tocsr()
    # Unsmoothed idf_ is ln(N / df) + 1
    idf = TfidfTransformer(norm=None, smooth_idf=False).fit(counts).idf_ - 1.0
    vocabulary = vectorizer.get_feature_names_out()

    scores: dict[str, dict[str, float]] = {}
    for row, doc in enumerate(corpus.documents):
        start, end = counts.indptr[row], counts.indptr[row + 1]
        scores[doc.cve_id] = {
            str(vocabulary[col]): float(count * idf[col])
            for col, count in zip(counts.indices[start:end], counts.data[start:end], strict=True)
        }
    return scores


def tfidf_rank(corpus: PrimedCorpus) -> dict[str, list[str]]:
    """Unique tokens per document by descending tf-idf, ties by first occurrence."""
    scores = tfidf_scores(corpus)
    ranking: dict[str, list[str]] = {}
    for doc in corpus.documents:
        first_seen = {token: pos for pos, token in reversed(list(enumerate(doc.tokens)))}
        doc_scores = scores[doc.cve_id]
        ranking[doc.cve_id] = sorted(first_seen, key=lambda t: (-doc_scores[t], first_seen[t]))
    return ranking


# =============================================================================
# Part of speech
# =============================================================================


def _suffix_class(word: str) -> PosClass | None:
    if word.endswith(NON_NOUN_SUFFIXES):
        return PosClass.NON_NOUN
    if word.endswith(NOUN_SUFFIXES):
        return PosClass.NOUN
    return None


def classify_pos(token: str) -> PosClass:
    """
    Classify a surface token as noun or non_noun.

    Lexicon lookup first, then suffix rules on the token and on its singular,
    then noun by default.
    """
    word = token.lower()
    if word in STOP_WORDS or word in ACTION_WORDS:
        return PosClass.NON_NOUN

    forms = [word]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 3:
        forms.append(word[:-1])
    for form in forms:
        found = _suffix_class(form)
        if found is not None:
            return found
    return PosClass.NOUN


def is_candidate(token: str) -> bool:
    """Content words are TextRank candidates; stop words and bare numbers are not."""
    word = token.lower()
    return word not in STOP_WORDS and not word.isdigit()


# =============================================================================
# TextRank
# =============================================================================


def token_rank(
    document: PrimedDocument,
    config: ExtractionConfig | None = None,
) -> dict[str, float]:
    """PageRank scores of the candidate stems of one document."""
    config = config or ExtractionConfig()
    sequence = [
        stem
        for stem, surface in zip(document.tokens, document.surfaces, strict=True)
        if is_candidate(surface)
    ]
    if not sequence:
        return {}

    graph = nx.Graph()
    graph.add_nodes_from(dict.fromkeys(sequence))
    for i, stem in enumerate(sequence):
        for other in sequence[i + 1 : i + config.textrank_window]:
            if other != stem:
                graph.add_edge(stem, other)

    # networkx checks the summed change against N * tol; the tolerance bounds each vertex
    return nx.pagerank(
        graph,
        alpha=config.textrank_damping,
        max_iter=config.textrank_max_iter,
        tol=config.textrank_tolerance / graph.number_of_nodes(),
    )


def _candidate_runs(document: PrimedDocument) -> list[list[int]]:
    runs: list[list[int]] = []
    current: list[int] = []
    for pos, surface in enumerate(document.surfaces):
        if is_candidate(surface):
            current.append(pos)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return runs


def document_phrases(
    document: PrimedDocument,
    config: ExtractionConfig | None = None,
) -> list[RankedPhrase]:
    """Ranked phrases of one document: maximal runs of adjacent candidates."""
    scores = token_rank(document, config)
    if not scores:
        return []

    phrases: list[RankedPhrase] = []
    seen: set[tuple[str, ...]] = set()
    for run in _candidate_runs(document):
        stems = tuple(document.tokens[pos] for pos in run)
        if stems in seen:
            continue
        seen.add(stems)
        surfaces = [document.surfaces[pos] for pos in run]
        phrases.append(
            RankedPhrase(
                tokens=surfaces,
                stems=list(stems),
                positions=run,
                score=sum(scores[stem] for stem in stems),
                pos_class=classify_pos(surfaces[-1]),
            )
        )

    phrases.sort(key=lambda p: (-p.score, p.positions[0]))
    return phrases


def textrank_phrases(
    corpus: PrimedCorpus,
    config: ExtractionConfig | None = None,
) -> dict[str, list[RankedPhrase]]:
    return {doc.cve_id: document_phrases(doc, config) for doc in corpus.documents}


# =============================================================================
# Input/output pairs
# =============================================================================


def prune_phrase(
    phrase: RankedPhrase,
    ranking: list[str],
    max_tokens: int,
) -> RankedPhrase:
    """Keep the max_tokens tokens with the best tf-idf rank, in original order."""
    if len(phrase.tokens) <= max_tokens:
        return phrase
    rank_of = {token: i for i, token in enumerate(ranking)}
    order = sorted(
        range(len(phrase.stems)),
        key=lambda i: (rank_of.get(phrase.stems[i], len(rank_of)), i),
    )
    keep = sorted(order[:max_tokens])
    return phrase.model_copy(
        update={
            "tokens": [phrase.tokens[i] for i in keep],
            "stems": [phrase.stems[i] for i in keep],
            "positions": [phrase.positions[i] for i in keep],
        }
    )


def destem(stems: list[str], corpus: PrimedCorpus, document: PrimedDocument) -> list[str]:
    """Surface forms for stems, preferring the document's own spelling."""
    local: dict[str, str] = {}
    for stem, surface in zip(document.tokens, document.surfaces, strict=True):
        local.setdefault(stem, surface)
    return [local.get(stem) or min(corpus.stem_map.get(stem, {stem})) for stem in stems]


def _phrase_text(
    phrase: RankedPhrase,
    ranking: list[str],
    corpus: PrimedCorpus,
    document: PrimedDocument,
    max_tokens: int,
) -> tuple[str, set[str]]:
    pruned = prune_phrase(phrase, ranking, max_tokens)
    return " ".join(destem(pruned.stems, corpus, document)), set(pruned.stems)


def _name_stems(names: Iterable[str]) -> set[str]:
    return {stem for name in names for stem in stem_tokens(name)}


def extract_io(
    corpus: PrimedCorpus,
    ranking: Mapping[str, list[str]],
    phrases: Mapping[str, list[RankedPhrase]],
    config: ExtractionConfig | None = None,
    *,
    owner_names: Mapping[str, str] | None = None,
    device_names: Iterable[str] = (),
) -> dict[str, list[IoPair]]:
    """
    Pair the top non_noun phrases (inputs) with the top noun phrases (outputs).

    Args:
        corpus: Primed corpus
        ranking: tfidf_rank output for the same corpus
        phrases: textrank_phrases output for the same corpus
        config: Extraction knobs; max_inputs=1 pairs only the top input
        owner_names: cve_id -> display name of the owning device
        device_names: display names of every catalog device

    Returns:
        cve_id -> IoPair list, empty for documents without noun phrases
    """
    config = config or ExtractionConfig()
    owner_names = owner_names or {}
    all_names = list(device_names)

    pairs: dict[str, list[IoPair]] = {}
    for doc in corpus.documents:
        doc_ranking = ranking.get(doc.cve_id, [])
        texts = [
            (
                phrase.pos_class,
                *_phrase_text(phrase, doc_ranking, corpus, doc, config.max_phrase_tokens),
            )
            for phrase in phrases.get(doc.cve_id, [])
        ]
        inputs = [text for pos, text, _ in texts if pos == PosClass.NON_NOUN]
        outputs = [(text, stems) for pos, text, stems in texts if pos == PosClass.NOUN]

        inputs = list(dict.fromkeys(inputs))[: config.max_inputs]
        if not inputs:
            inputs = [config.fallback_input]

        if not outputs:
            if not doc.empty:
                logger.warning("No output phrases extracted", cve_id=doc.cve_id)
            pairs[doc.cve_id] = []
            continue

        owner = owner_names.get(doc.cve_id)
        foreign = _name_stems(name for name in all_names if name != owner)

        retained: dict[str, set[str]] = {}
        for text, stems in outputs:
            if text not in retained and len(retained) < config.max_outputs:
                retained[text] = stems

        doc_pairs: list[IoPair] = []
        for source in inputs:
            for target, stems in retained.items():
                doc_pairs.append(
                    IoPair(
                        cve_id=doc.cve_id,
                        input=source,
                        output=target,
                        self_target=not (stems & foreign),
                    )
                )
        pairs[doc.cve_id] = doc_pairs

    return pairs


def extract_pairs(
    raw_descriptions: Iterable[tuple[str, str]],
    config: ExtractionConfig | None = None,
    *,
    owner_names: Mapping[str, str] | None = None,
    device_names: Iterable[str] = (),
) -> dict[str, list[IoPair]]:
    """Run the whole text pipeline over raw descriptions."""
    corpus = prime(raw_descriptions)
    ranking = tfidf_rank(corpus)
    phrases = textrank_phrases(corpus, config)
    pairs = extract_io(
        corpus,
        ranking,
        phrases,
        config,
        owner_names=owner_names,
        device_names=device_names,
    )
    logger.info(
        "Extracted input/output pairs",
        document_count=len(corpus.documents),
        pair_count=sum(len(p) for p in pairs.values()),
    )
    return pairs
