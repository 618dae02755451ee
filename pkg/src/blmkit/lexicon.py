"""Seed lexicons and masked-slot augmentation.

A lexicon stores, per verb entry, every inflected form the realizer needs
(explicit strings, no morphology code) plus the argument slot lists, and a
table of function words.  Augmentation extends slot lists through a
pluggable alternative provider and emits a line-oriented audit file
(``slot-id<TAB>candidate<TAB>accepted``) mirroring a manual review loop;
edited audits can be re-ingested with :func:`apply_audit`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .core import BlmError

LEXICON_FORMAT = "blm-lexicon"
LEXICON_VERSION = 1

# slots whose fillers can surface as passive subjects, so every filler's
# agreement tag must have a matching passive verb form
_PASSIVE_SLOTS = {"agent", "theme", "loc"}

_REQUIRED_FORMS = {
    "agr": ("sg", "pl"),
    "spray-load": ("act",),
    "cos-od": ("act_sg", "act_pl", "anti_sg", "anti_pl"),
    "roll": ("act",),
}

_REQUIRED_SLOTS = {
    "agr": ("subject", "pp1", "pp2"),
    "spray-load": ("agent", "theme", "loc"),
    "cos-od": ("agent", "theme"),
    "roll": ("agent", "theme", "loc"),
}


@dataclass
class Lexicon:
    language: str
    family: str
    function_words: dict
    entries: dict
    shared_slots: dict = field(default_factory=dict)
    slot_templates: dict = field(default_factory=dict)

    def verb(self, key: str) -> dict:
        if key not in self.entries:
            raise BlmError(f"lexicon has no verb entry {key!r}")
        return self.entries[key]

    def verbs(self):
        return tuple(self.entries)

    def slot(self, slot_id: str):
        """Resolve "entry:<verb>:<slot>" or "shared:<slot>" to its list."""
        parts = slot_id.split(":")
        if parts[0] == "shared" and len(parts) == 2:
            if parts[1] not in self.shared_slots:
                raise BlmError(f"lexicon has no shared slot {parts[1]!r}")
            return self.shared_slots[parts[1]]
        if parts[0] == "entry" and len(parts) == 3:
            entry = self.verb(parts[1])
            if parts[2] not in entry["slots"]:
                raise BlmError(f"entry {parts[1]!r}: no slot {parts[2]!r}")
            return entry["slots"][parts[2]]
        raise BlmError(f"bad slot id {slot_id!r}")

    def slot_ids(self):
        ids = []
        for verb in self.entries:
            for name in self.entries[verb]["slots"]:
                ids.append(f"entry:{verb}:{name}")
        for name in self.shared_slots:
            ids.append(f"shared:{name}")
        return tuple(ids)

    def to_dict(self) -> dict:
        return {
            "format": LEXICON_FORMAT,
            "version": LEXICON_VERSION,
            "language": self.language,
            "family": self.family,
            "function_words": self.function_words,
            "entries": self.entries,
            "shared_slots": self.shared_slots,
            "slot_templates": self.slot_templates,
        }


def _validate(lex: Lexicon):
    family = lex.family
    if family not in _REQUIRED_FORMS:
        raise BlmError(f"unknown lexicon family {family!r}")
    if not lex.entries:
        raise BlmError("lexicon has no verb entries")
    for key, entry in lex.entries.items():
        if "forms" not in entry or "slots" not in entry:
            raise BlmError(f"entry {key!r}: needs 'forms' and 'slots'")
        for form in _REQUIRED_FORMS[family]:
            if form not in entry["forms"]:
                raise BlmError(f"entry {key!r}: missing verb form {form!r}")
        if family == "spray-load" and "prep" not in entry:
            raise BlmError(f"entry {key!r}: missing lexical preposition")
        for slot in _REQUIRED_SLOTS[family]:
            items = entry["slots"].get(slot)
            if not items:
                raise BlmError(f"entry {key!r}: {slot} empty")
            for item in items:
                if family == "agr":
                    need = ("sg", "pl", "bare_sg", "bare_pl") if slot == "pp2" else ("sg", "pl")
                    for f in need:
                        if f not in item:
                            raise BlmError(f"entry {key!r}: {slot} item missing {f!r}")
                else:
                    if "text" not in item:
                        raise BlmError(f"entry {key!r}: {slot} item missing 'text'")
                    if family in ("spray-load", "cos-od") and slot in _PASSIVE_SLOTS:
                        agr = item.get("agr")
                        if not agr:
                            raise BlmError(f"entry {key!r}: {slot} item missing 'agr'")
                        if f"pass_{agr}" not in entry["forms"]:
                            raise BlmError(
                                f"entry {key!r}: no passive form for agreement {agr!r}"
                            )
    if family == "cos-od":
        for name in ("p_np", "by_np"):
            if not lex.shared_slots.get(name):
                raise BlmError(f"shared slot {name!r} empty")


def lexicon_from_dict(data: dict) -> Lexicon:
    if data.get("format") != LEXICON_FORMAT:
        raise BlmError(
            f"not a lexicon file: format={data.get('format')!r}, "
            f"expected {LEXICON_FORMAT!r}"
        )
    if data.get("version") != LEXICON_VERSION:
        raise BlmError(f"unsupported lexicon version {data.get('version')!r}")
    lex = Lexicon(
        language=data["language"],
        family=data["family"],
        function_words=data.get("function_words", {}),
        entries=data["entries"],
        shared_slots=data.get("shared_slots", {}),
        slot_templates=data.get("slot_templates", {}),
    )
    _validate(lex)
    return lex


def load_lexicon(path) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BlmError(f"lexicon file {path}: invalid JSON ({exc})") from exc
    return lexicon_from_dict(data)


def save_lexicon(lex: Lexicon, path):
    _validate(lex)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(lex.to_dict(), fh, ensure_ascii=False, indent=1, sort_keys=True)
        fh.write("\n")


_TASK_LEXICON = {
    "agr": "agr.{lang}.json",
    "spray-load-ALT-ATL": "spray-load.{lang}.json",
    "spray-load-ATL-ALT": "spray-load.{lang}.json",
    "cos": "cos.{lang}.json",
    "od": "od.{lang}.json",
    "roll": "roll.{lang}.json",
}


def builtin_lexicon(task: str, language: str) -> Lexicon:
    if task not in _TASK_LEXICON:
        raise BlmError(f"unknown task {task!r}")
    name = _TASK_LEXICON[task].format(lang=language)
    ref = resources.files("blmkit").joinpath(f"data/lexicons/{name}")
    if not ref.is_file():
        raise BlmError(f"no builtin lexicon for ({task}, {language})")
    return lexicon_from_dict(json.loads(ref.read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Augmentation
# ---------------------------------------------------------------------------

class TableProvider:
    """Deterministic alternative provider backed by a curated synonym table.

    The table maps an original filler (its primary surface form) to ranked
    candidate strings; multi-field slots use pipe-separated field values.
    """

    def __init__(self, table: dict, identity: str = "table"):
        self.table = dict(table)
        self.identity = identity

    def alternatives(self, masked_text: str, original: str, k: int):
        seen, out = set(), []
        for candidate in self.table.get(original, ()):
            if candidate not in seen:
                seen.add(candidate)
                out.append(candidate)
            if len(out) == k:
                break
        return out


class EmptyProvider:
    identity = "empty"

    def alternatives(self, masked_text: str, original: str, k: int):
        return []


def builtin_table_provider(language: str) -> TableProvider:
    ref = resources.files("blmkit").joinpath(f"data/synonyms/{language}.json")
    if not ref.is_file():
        raise BlmError(f"no builtin synonym table for language {language!r}")
    table = json.loads(ref.read_text(encoding="utf-8"))
    return TableProvider(table, identity=f"table:{language}")


def _primary_field(family: str, slot_name: str) -> str:
    return "sg" if family == "agr" else "text"


def _build_item(template: dict, candidate: str) -> dict:
    parts = candidate.split("|")
    item = {}
    for fieldname, pattern in template.items():
        try:
            item[fieldname] = pattern.format(*parts, text=parts[0])
        except IndexError:
            raise BlmError(
                f"candidate {candidate!r} does not supply enough fields "
                f"for pattern {pattern!r}"
            )
    return item


def mask_context(lex: Lexicon, slot_id: str, original: str) -> str:
    """A masked sentence fragment for the slot, for fill-mask providers."""
    parts = slot_id.split(":")
    if parts[0] == "shared":
        verb = next(iter(lex.entries))
        entry = lex.entries[verb]
    else:
        verb = parts[1]
        entry = lex.entries[verb]
    forms = entry["forms"]
    if lex.family == "agr":
        subj = entry["slots"]["subject"][0]["sg"]
        pp1 = entry["slots"]["pp1"][0]["sg"]
        vp = forms["sg"]
        slot_name = parts[2]
        words = {"subject": f"[MASK] {pp1} {vp}",
                 "pp1": f"{subj} [MASK] {vp}",
                 "pp2": f"{subj} {pp1} [MASK] {vp}"}
        return words[slot_name]
    if lex.family == "spray-load":
        agent = entry["slots"]["agent"][0]["text"]
        theme = entry["slots"]["theme"][0]["text"]
        loc = entry["slots"]["loc"][0]["text"]
        act = forms["act"]
        prep = entry["prep"]
        with_w = lex.function_words.get("with", "with")
        slot_name = parts[2]
        words = {"agent": f"[MASK] {act} {theme} {prep} {loc}",
                 "theme": f"{agent} {act} {loc} {with_w} [MASK]",
                 "loc": f"{agent} {act} {theme} {prep} [MASK]"}
        return words[slot_name]
    if lex.family == "cos-od":
        agent = entry["slots"]["agent"][0]["text"]
        theme = entry["slots"]["theme"][0]["text"]
        act = forms["act_sg"]
        slot_name = parts[-1]
        words = {"agent": f"[MASK] {act} {theme}",
                 "theme": f"{agent} {act} [MASK]",
                 "p_np": f"{agent} {act} {theme} [MASK]",
                 "by_np": f"{agent} {act} {theme} [MASK]"}
        return words[slot_name]
    # roll
    agent = entry["slots"]["agent"][0]["text"]
    theme = entry["slots"]["theme"][0]["text"]
    loc = entry["slots"]["loc"][0]["text"]
    act = forms["act"]
    slot_name = parts[2]
    words = {"agent": f"[MASK] {act} {theme}",
             "theme": f"{agent} {act} [MASK]",
             "loc": f"{theme} {act} [MASK]"}
    return words[slot_name]


_DEFINITE_MARKERS = {"en": "the"}


def write_slot_requests(lex: Lexicon, path):
    """Emit a JSON-lines slot file for external fill-mask backends.

    One record per maskable filler: slot id, the original surface, and the
    masked contexts to query (an indefinite one, plus a definite-marked one
    where the language marks definiteness with a free article).
    """
    marker = _DEFINITE_MARKERS.get(lex.language)
    with open(path, "w", encoding="utf-8") as fh:
        for slot_id in lex.slot_ids():
            slot_name = slot_id.split(":")[-1]
            if lex.slot_templates.get(slot_name) is None:
                continue
            primary = _primary_field(lex.family, slot_name)
            for item in lex.slot(slot_id):
                original = item[primary]
                context = mask_context(lex, slot_id, original)
                contexts = [{"tag": "indef", "text": context}]
                if marker:
                    contexts.append({"tag": "def",
                                     "text": context.replace("[MASK]",
                                                             f"{marker} [MASK]")})
                fh.write(json.dumps({"slot": slot_id, "original": original,
                                     "contexts": contexts},
                                    ensure_ascii=False, sort_keys=True) + "\n")


def augment(lex: Lexicon, provider, k: int, rng_seed: int, audit_path=None) -> Lexicon:
    """Extend slot lists with up to ``k`` provider candidates per slot.

    Originals are preserved first and never removed; duplicates are dropped.
    Every candidate is recorded in the audit file with its accepted flag;
    a provider failure on a slot is recorded and skipped, never fatal.
    Deterministic for a deterministic provider.
    """
    if k < 1:
        raise BlmError("augmentation cutoff k must be >= 1")
    data = json.loads(json.dumps(lex.to_dict()))  # deep copy
    audit_lines = [f"# augment provider={getattr(provider, 'identity', '?')} k={k} seed={rng_seed}"]
    for slot_id in lex.slot_ids():
        parts = slot_id.split(":")
        slot_name = parts[-1]
        template = lex.slot_templates.get(slot_name)
        if template is None:
            continue
        if parts[0] == "shared":
            items = data["shared_slots"][slot_name]
        else:
            items = data["entries"][parts[1]]["slots"][slot_name]
        primary = _primary_field(lex.family, slot_name)
        existing = {item[primary] for item in items}
        added = 0
        for item in list(items):
            if added >= k:
                break
            original = item[primary]
            context = mask_context(lex, slot_id, original)
            try:
                candidates = provider.alternatives(context, original, k)
            except Exception as exc:  # provider failure: audit and move on
                audit_lines.append(f"# error slot={slot_id} original={original!r}: {exc}")
                continue
            audit_lines.append(f"# context slot={slot_id}: {context}")
            for cand in candidates:
                new_item = _build_item(template, cand)
                accept = 1 if (new_item[primary] not in existing and added < k) else 0
                audit_lines.append(f"{slot_id}\t{cand}\t{accept}")
                if accept:
                    items.append(new_item)
                    existing.add(new_item[primary])
                    added += 1
    if audit_path is not None:
        with open(audit_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(audit_lines) + "\n")
    return lexicon_from_dict(data)


def parse_audit(path):
    """Yield (slot_id, candidate, accepted) from an audit file."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in ("0", "1"):
                raise BlmError(f"audit file {path}: malformed line {lineno}: {line!r}")
            rows.append((parts[0], parts[1], int(parts[2])))
    return rows


def apply_audit(lex: Lexicon, audit_path) -> Lexicon:
    """Ingest a (hand-edited) audit file: add rows with accepted=1."""
    data = json.loads(json.dumps(lex.to_dict()))
    for slot_id, candidate, accepted in parse_audit(audit_path):
        if not accepted:
            continue
        parts = slot_id.split(":")
        slot_name = parts[-1]
        template = lex.slot_templates.get(slot_name)
        if template is None:
            raise BlmError(f"audit row targets slot {slot_id!r} with no slot template")
        if parts[0] == "shared":
            items = data["shared_slots"][slot_name]
        else:
            if parts[1] not in data["entries"]:
                raise BlmError(f"audit row targets unknown entry {parts[1]!r}")
            items = data["entries"][parts[1]]["slots"][slot_name]
        new_item = _build_item(template, candidate)
        primary = _primary_field(lex.family, slot_name)
        if all(item[primary] != new_item[primary] for item in items):
            items.append(new_item)
    return lexicon_from_dict(data)
