"""Synthetic record/description generator with retained ground truth.

Produces NVD-style records paired with descriptions assembled from fixed
templates (about 50 tokens each) over vendor, product, version, symbol and
relevant-term vocabularies. Every planted entity is recorded in the gold
corpus, so the auto-labeling pipeline can be scored exactly.

The vocabularies are engineered so the rule pipeline stays perfectly
precise on generated text: filler words never form a relevant-term phrase,
never collide with any record field value, and distractor product mentions
(planted without record support, the only unrecoverable entities) use
plain-shaped names that no heuristic fires on.
"""

from __future__ import annotations

import random

from .autolabel import Gazetteer, StructuredRecord, is_symbol_shaped, is_version_shaped
from .corpus import AnnotatedDescription, Corpus, EntityLabel, IOBTag, build_description, tokenize
from .errors import InvalidParameterError
from .features import DEFAULT_CONFIG, pos_tag

CWE_RELEVANT_TERMS: dict[str, tuple[tuple[str, ...], ...]] = {
    "CWE-79": (("cross-site", "scripting"), ("xss",), ("arbitrary", "web", "script")),
    "CWE-89": (("sql", "injection"), ("execute", "arbitrary", "sql")),
    "CWE-119": (
        ("buffer", "overflow"),
        ("memory", "corruption"),
        ("execute", "arbitrary", "code"),
        ("denial", "of", "service"),
    ),
    "CWE-287": (("authentication", "issues"), ("bypass", "authentication")),
    "CWE-22": (("directory", "traversal"), ("path", "traversal")),
    "CWE-200": (("information", "disclosure"), ("obtain", "sensitive", "information")),
    "CWE-352": (("cross-site", "request", "forgery"), ("csrf",)),
    "CWE-94": (("code", "injection"), ("remote", "code", "execution")),
}

#: Planted in every description regardless of weakness class.
SHARED_RELEVANT_TERMS: tuple[tuple[str, ...], ...] = (("remote", "attackers"),)

VENDORS = (
    "Apple", "Microsoft", "Oracle", "Adobe", "Mozilla", "Google", "Cisco",
    "Novell", "Symantec", "IBM", "Siemens", "Canonical", "Red Hat", "Hewlett Packard",
)

PRODUCTS = (
    "Safari", "Chrome", "Firefox", "Thunderbird", "Photoshop", "Acrobat",
    "ColdFusion", "WebSphere", "WebLogic", "Struts", "Tomcat", "Jenkins",
    "Drupal", "Joomla", "Magento", "OpenSSL", "PostgreSQL", "Nginx",
    "SharePoint", "Silverlight", "QuickTime", "Internet Explorer", "Flash Player",
)

LANGUAGES = ("PHP", "Java", "Python", "Perl", "Ruby", "JavaScript")

SYMBOLS = (
    "parseRequest", "getUserName", "handleInput", "readBuffer", "execQuery",
    "loadConfig", "do_login", "check_input", "parse_header", "sanitize_url",
    "index.php", "upload.asp", "config.js", "core.dll", "setup.exe",
    "parser.c", "module.py", "gateway.jsp", "handler.pl", "kernel.h",
)

#: Object nouns for the "via a crafted X" slot; none occur in any
#: relevant-term phrase or record field.
CRAFTED_NOUNS = ("packet", "message", "document", "parameter", "attachment", "payload")

_FILLER_SENTENCES = (
    ("no", "public", "workaround", "is", "currently", "available", "."),
    ("users", "should", "upgrade", "as", "soon", "as", "possible", "."),
    ("a", "security", "patch", "has", "been", "released", "for", "supported", "builds", "."),
)


def _plain_shaped(name: str) -> bool:
    return all(
        not is_version_shaped(word) and not is_symbol_shaped(word) for word in name.split()
    )


#: Only plain-shaped product names may appear without record support;
#: anything camel/snake/extension-shaped would be recovered by heuristics.
DISTRACTOR_PRODUCTS = tuple(p for p in PRODUCTS if _plain_shaped(p))


def synthetic_gazetteer() -> Gazetteer:
    """Gazetteer holding exactly the phrases the generator can plant."""
    entries = set(SHARED_RELEVANT_TERMS)
    for phrases in CWE_RELEVANT_TERMS.values():
        entries.update(phrases)
    return Gazetteer(frozenset(entries), max_n=3)


class _Assembler:
    """Accumulates tokens and gold entity spans for one description."""

    def __init__(self) -> None:
        self.tokens: list[str] = []
        self.spans: list[tuple[int, int, EntityLabel, str]] = []

    def words(self, *words: str) -> None:
        self.tokens.extend(words)

    def entity(self, words, label: EntityLabel, provenance: str) -> None:
        start = len(self.tokens)
        self.tokens.extend(words)
        self.spans.append((start, len(self.tokens), label, provenance))


def _random_version(rng: random.Random) -> str:
    style = rng.randrange(3)
    if style == 0:
        return f"{rng.randint(1, 12)}.{rng.randint(0, 9)}"
    if style == 1:
        return f"{rng.randint(1, 12)}.{rng.randint(0, 9)}.{rng.randint(0, 9)}"
    return f"{rng.randint(1, 12)}.{rng.randint(0, 9)}.x"


def _version_clause(asm: _Assembler, rng: random.Random, planted: list[tuple[str, bool]]) -> None:
    """Version phrase right after the product mention.

    ``planted`` collects (version, in_record) pairs; versions left out of
    the record can only be recovered by the trigger-window heuristic.
    """
    variant = rng.randrange(4)
    if variant == 0:
        return
    if variant == 1:
        version = _random_version(rng)
        asm.words("before")
        asm.entity([version], EntityLabel.SOFTWARE_VERSION, "heuristic")
        planted.append((version, rng.random() < 0.7))
    elif variant == 2:
        low = _random_version(rng)
        high = _random_version(rng)
        while high == low:
            high = _random_version(rng)
        asm.entity([low], EntityLabel.SOFTWARE_VERSION, "record-match")
        asm.words("through")
        asm.entity([high], EntityLabel.SOFTWARE_VERSION, "heuristic")
        planted.append((low, True))
        planted.append((high, rng.random() < 0.5))
    else:
        version = _random_version(rng)
        asm.entity([version], EntityLabel.SOFTWARE_VERSION, "record-match")
        asm.words("and", "earlier")
        planted.append((version, True))


def _pick_terms(rng: random.Random, cwe: str, count: int) -> list[tuple[str, ...]]:
    pool = CWE_RELEVANT_TERMS[cwe]
    return [pool[rng.randrange(len(pool))] for _ in range(count)]


def _generate_one(
    index: int, rng: random.Random, distractor_rate: float
) -> tuple[StructuredRecord, AnnotatedDescription]:
    cwe = sorted(CWE_RELEVANT_TERMS)[rng.randrange(len(CWE_RELEVANT_TERMS))]
    vendor = VENDORS[rng.randrange(len(VENDORS))]
    product = PRODUCTS[rng.randrange(len(PRODUCTS))]
    record_id = f"CVE-{rng.randint(2010, 2013)}-{index + 1:04d}"
    planted_versions: list[tuple[str, bool]] = []
    rt = EntityLabel.VULNERABILITY_RELEVANT_TERM

    asm = _Assembler()
    # Core sentence: relevant term, vendor, product, version clause, effect.
    term1, term2 = _pick_terms(rng, cwe, 2)
    asm.entity(term1, rt, "gazetteer")
    asm.words("in")
    asm.entity(vendor.split(), EntityLabel.SOFTWARE_VENDOR, "record-match")
    asm.entity(product.split(), EntityLabel.SOFTWARE_PRODUCT, "record-match")
    _version_clause(asm, rng, planted_versions)
    asm.words("allows")
    asm.entity(("remote", "attackers"), rt, "gazetteer")
    asm.words("to")
    asm.entity(term2, rt, "gazetteer")
    asm.words("via", "a", "crafted", CRAFTED_NOUNS[rng.randrange(len(CRAFTED_NOUNS))], ".")

    language: str | None = None
    extra: list[_Assembler] = []

    if rng.random() < 0.8:  # symbol sentence
        symbol = SYMBOLS[rng.randrange(len(SYMBOLS))]
        sentence = _Assembler()
        sentence.words("the")
        sentence.entity([symbol], EntityLabel.SOFTWARE_SYMBOL, "heuristic")
        sentence.words("function", "in")
        sentence.entity(product.split(), EntityLabel.SOFTWARE_PRODUCT, "record-match")
        sentence.words("does", "not", "properly", "validate", "user", "supplied", "input", ".")
        extra.append(sentence)
    if rng.random() < 0.6:  # identifier sentence
        sentence = _Assembler()
        sentence.words("the", "flaw", "is", "tracked", "as")
        sentence.entity([record_id], EntityLabel.VULNERABILITY_NAME, "record-match")
        sentence.words(".")
        extra.append(sentence)
    if rng.random() < 0.8:  # impact sentence
        term3, term4 = _pick_terms(rng, cwe, 2)
        sentence = _Assembler()
        sentence.words("successful", "exploitation", "may", "lead", "to")
        sentence.entity(term3, rt, "gazetteer")
        sentence.words("or")
        sentence.entity(term4, rt, "gazetteer")
        sentence.words(".")
        extra.append(sentence)
    if rng.random() < 0.35:  # language sentence
        language = LANGUAGES[rng.randrange(len(LANGUAGES))]
        sentence = _Assembler()
        sentence.words("the", "affected", "component", "is", "written", "in")
        sentence.entity([language], EntityLabel.SOFTWARE_LANGUAGE, "record-match")
        sentence.words(".")
        extra.append(sentence)
    if rng.random() < distractor_rate:  # out-of-record product mention
        choices = [p for p in DISTRACTOR_PRODUCTS if p != product]
        distractor = choices[rng.randrange(len(choices))]
        sentence = _Assembler()
        sentence.words("the", "problem", "does", "not", "affect")
        sentence.entity(distractor.split(), EntityLabel.SOFTWARE_PRODUCT, "record-match")
        sentence.words("installations", ".")
        extra.append(sentence)

    rng.shuffle(extra)
    for sentence in extra:
        base = len(asm.tokens)
        asm.tokens.extend(sentence.tokens)
        asm.spans.extend((s + base, e + base, lbl, prov) for s, e, lbl, prov in sentence.spans)

    filler_cycle = 0
    while len(asm.tokens) < 42:
        asm.words(*_FILLER_SENTENCES[filler_cycle % len(_FILLER_SENTENCES)])
        filler_cycle += 1

    record_versions = [v for v, in_record in planted_versions if in_record]
    while rng.random() < 0.3:  # realistic extra versions that never occur in text
        candidate = _random_version(rng)
        if candidate not in [v for v, _ in planted_versions] and candidate not in record_versions:
            record_versions.append(candidate)

    raw_text = " ".join(asm.tokens)
    record = StructuredRecord(
        id=record_id,
        vendors=(vendor,),
        products=(product,),
        versions=tuple(record_versions),
        languages=(language,) if language is not None else (),
        cwe_id=cwe,
        description=raw_text,
    )

    tokens = tokenize(raw_text)
    if [t.text for t in tokens] != asm.tokens:
        raise RuntimeError(f"generator produced text the tokenizer splits differently: {record_id}")
    tags = [IOBTag("O")] * len(tokens)
    provenance = ["none"] * len(tokens)
    for start, end, label, prov in asm.spans:
        for i in range(start, end):
            tags[i] = IOBTag("B" if i == start else "I", label)
            provenance[i] = prov
    pos = pos_tag(tokens, DEFAULT_CONFIG.pos_provider)
    rows = [(tokens[i].text, tags[i], pos[i], provenance[i]) for i in range(len(tokens))]
    return record, build_description(record_id, "synthetic", rows)


def generate_synthetic(
    n_records: int, seed: int = 0, distractor_rate: float = 0.2
) -> tuple[list[StructuredRecord], Corpus]:
    """Generate ``n_records`` record/description pairs plus the gold corpus.

    Deterministic per seed. ``distractor_rate`` is the per-record chance of
    planting one product mention the record cannot support; set it to 0.0
    for a corpus the rule pipeline recovers perfectly.
    """
    if n_records < 0:
        raise InvalidParameterError(f"n_records must be >= 0, got {n_records}")
    if not 0.0 <= distractor_rate <= 1.0:
        raise InvalidParameterError(f"distractor_rate must be in [0, 1], got {distractor_rate}")
    rng = random.Random(seed)
    records: list[StructuredRecord] = []
    descriptions = []
    for i in range(n_records):
        record, description = _generate_one(i, rng, distractor_rate)
        records.append(record)
        descriptions.append(description)
    return records, Corpus.from_descriptions(descriptions)
