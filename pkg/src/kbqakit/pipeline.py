"""Stage orchestration: config loading, provider construction, manifest-based
caching, and the stage functions the command line drives.

Every stage reads files, writes files, and records a fingerprint of its
inputs in `manifest.json` under the output directory. A stage whose
fingerprint is unchanged and whose outputs still exist is skipped, so reruns
are cheap and deleting an artifact only forces that stage and anything
downstream of it.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import evaluation, kg, linking, passages, questions, tagging, templates, verification
from .cache import ProviderCache, RateGate
from .providers import (
    CapitalizedNer,
    DictionaryLemmatizer,
    HashedBowEmbedder,
    IdentityLemmatizer,
    IdentityRefine,
    OverlapReranker,
    ReplayArticleFetcher,
    ReplayArticleSearch,
    ReplayQaTagger,
    ReplayRefine,
    ReplaySuggest,
    ReplayWikiSearch,
    RuleBasedPos,
)
from .records import NATURAL, TEMPLATE, CandidateExample, KbqaExample, question_id, read_jsonl, write_jsonl
from .service import save_work_items, stage1_item, stage2_item

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class ConfigError(ValueError):
    """Bad or missing configuration; messages name the offending field."""


class PipelineError(RuntimeError):
    """A stage cannot run: missing upstream outputs or inconsistent data."""


# -- configuration -----------------------------------------------------


def _section(raw: dict, name: str, allowed: set[str], required: set[str] = frozenset()) -> dict:
    value = raw.get(name, {})
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a mapping")
    unknown = set(value) - allowed
    if unknown:
        raise ConfigError(f"{name}: unknown key {sorted(unknown)[0]!r}")
    missing = required - set(value)
    if missing:
        raise ConfigError(f"{name}.{sorted(missing)[0]}: required")
    return value


@dataclass
class PipelineConfig:
    seed: int
    output_dir: Path
    kg: dict
    providers: dict[str, dict]
    questions: dict
    templates: dict
    passages: dict
    tagging: dict
    linking: dict
    verification: dict
    split: dict
    eval: dict
    cache_dir: Path | None
    base_dir: Path

    def resolve(self, value: str) -> Path:
        """Paths in the config are relative to the config file."""
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path


_TOP_KEYS = {
    "seed", "output_dir", "kg", "providers", "questions", "templates", "passages",
    "tagging", "linking", "verification", "split", "eval", "cache_dir",
}
_PROVIDER_ROLES = {
    "suggest", "article_search", "article_fetch", "wiki_search", "qa_tag",
    "rerank", "ner", "pos", "lemma", "dep", "embed", "inflect", "paraphrase", "llm",
}


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r}")
    if "output_dir" not in raw:
        raise ConfigError("output_dir: required")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed: must be an integer")

    providers = _section(raw, "providers", _PROVIDER_ROLES)
    for role, spec in providers.items():
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError(f"providers.{role}.kind: required")

    config = PipelineConfig(
        seed=seed,
        output_dir=Path(raw["output_dir"]),
        kg=_section(raw, "kg", {"triples", "labels", "hops"}, {"triples", "labels"}),
        providers=providers,
        questions=_section(raw, "questions", {"seeds", "max_completions"}),
        templates=_section(
            raw, "templates",
            {"language", "limit_per_template", "relations", "similarity_threshold", "refine"},
        ),
        passages=_section(raw, "passages", {"window", "step"}),
        tagging=_section(raw, "tagging", {"language", "min_ratio"}),
        linking=_section(raw, "linking", {"similarity_threshold"}),
        verification=_section(
            raw, "verification",
            {"annotators", "overlap_fraction", "stage1_sources", "stage2_sources",
             "template_decisions", "super_annotator", "log"},
        ),
        split=_section(raw, "split", {"test_fraction", "seed"}),
        eval=_section(
            raw, "eval",
            {"k_values", "triples_k", "hops", "responses", "predictions", "use_kg", "language"},
        ),
        cache_dir=Path(raw["cache_dir"]) if raw.get("cache_dir") else None,
        base_dir=path.parent.resolve(),
    )
    hops = config.kg.get("hops", 2)
    if not isinstance(hops, int) or hops < 0:
        raise ConfigError("kg.hops: must be a non-negative integer")
    fraction = config.split.get("test_fraction", verification.DEFAULT_TEST_FRACTION)
    if not (0 <= fraction <= 1):
        raise ConfigError("split.test_fraction: must be within [0, 1]")
    return config


def _out(config: PipelineConfig) -> Path:
    out = config.output_dir
    return out if out.is_absolute() else config.base_dir / out


# -- providers ---------------------------------------------------------


def _http_parts(config: PipelineConfig) -> tuple[ProviderCache, RateGate]:
    cache_dir = config.cache_dir or (_out(config) / "cache")
    if not Path(cache_dir).is_absolute():
        cache_dir = config.base_dir / cache_dir
    return ProviderCache(cache_dir), RateGate(0.5)


def build_provider(config: PipelineConfig, role: str):
    """Instantiates one provider from its config entry; None if absent and
    the role has no default."""
    spec = config.providers.get(role)
    defaults = {
        "rerank": {"kind": "overlap"},
        "ner": {"kind": "capitalized"},
        "pos": {"kind": "rules"},
        "lemma": {"kind": "identity"},
        "embed": {"kind": "hashed-bow"},
        "inflect": {"kind": "identity"},
        "paraphrase": {"kind": "identity"},
    }
    if spec is None:
        spec = defaults.get(role)
        if spec is None:
            return None
    kind = spec["kind"]
    path = config.resolve(spec["path"]) if "path" in spec else None

    def need_path():
        if path is None:
            raise ConfigError(f"providers.{role}.path: required for kind {kind!r}")
        return path

    if kind == "none":
        return None
    if role == "suggest":
        if kind == "replay":
            return ReplaySuggest.from_json(need_path())
        if kind == "http":
            from .webclients import HttpSuggestClient

            cache, gate = _http_parts(config)
            return HttpSuggestClient(spec["url"], cache, gate, language=spec.get("language", "pl"))
    if role == "article_search":
        if kind == "replay":
            return ReplayArticleSearch.from_json(need_path())
        if kind == "mediawiki":
            from .webclients import MediaWikiSearchClient

            cache, gate = _http_parts(config)
            return MediaWikiSearchClient(spec["api_url"], spec["site_url"], cache, gate)
    if role == "article_fetch":
        if kind == "replay":
            return ReplayArticleFetcher.from_json(need_path())
        if kind == "mediawiki":
            from .webclients import MediaWikiFetchClient

            cache, gate = _http_parts(config)
            return MediaWikiFetchClient(spec["api_url"], cache, gate)
    if role == "wiki_search":
        if kind == "replay":
            return ReplayWikiSearch.from_json(need_path())
        if kind == "wikidata":
            from .webclients import WikidataSearchClient

            cache, gate = _http_parts(config)
            return WikidataSearchClient(spec["api_url"], cache, gate, language=spec.get("language", "en"))
    if role == "qa_tag":
        if kind == "replay":
            return ReplayQaTagger.from_json(need_path())
        if kind == "llm":
            llm = build_provider(config, "llm")
            if llm is None:
                raise ConfigError("providers.llm: required when qa_tag.kind is 'llm'")
            return tagging.LlmQaTagger(llm, language=config.tagging.get("language", "en"))
    if role == "rerank" and kind == "overlap":
        return OverlapReranker()
    if role == "ner" and kind == "capitalized":
        return CapitalizedNer()
    if role == "pos" and kind == "rules":
        adjectives = set(spec.get("adjectives", ())) or None
        return RuleBasedPos(adjectives)
    if role == "lemma":
        if kind == "identity":
            return IdentityLemmatizer()
        if kind == "table":
            return DictionaryLemmatizer.from_json(need_path())
    if role == "embed" and kind == "hashed-bow":
        return HashedBowEmbedder(dim=spec.get("dim", 256))
    if role in ("inflect", "paraphrase"):
        if kind == "identity":
            return IdentityRefine()
        if kind == "replay":
            return ReplayRefine.from_json(need_path())
        if kind == "llm":
            llm = build_provider(config, "llm")
            if llm is None:
                raise ConfigError(f"providers.llm: required when {role}.kind is 'llm'")
            return tagging.LlmRefiner(llm, role, language=config.templates.get("language", "en"))
    if role == "llm" and kind == "chat":
        from .webclients import ChatCompletionClient

        cache, gate = _http_parts(config)
        key = os.environ.get(spec.get("api_key_env", ""), "")
        return ChatCompletionClient(
            spec["base_url"], spec["model"], cache, gate,
            api_key=key, temperature=spec.get("temperature", 0.0),
        )
    raise ConfigError(f"providers.{role}.kind: unsupported kind {kind!r}")


def require_provider(config: PipelineConfig, role: str):
    provider = build_provider(config, role)
    if provider is None:
        raise ConfigError(f"providers.{role}: required for this stage")
    return provider


# -- atomic artifact writes -------------------------------------------


def _atomic_jsonl(path: Path, rows) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    count = write_jsonl(tmp, rows)
    os.replace(tmp, path)
    return count


def _atomic_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _atomic_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _atomic_graph(graph: kg.KnowledgeGraph, triples_path: Path, labels_path: Path) -> None:
    triples_path.parent.mkdir(parents=True, exist_ok=True)
    tmp_triples = triples_path.with_name(triples_path.name + ".tmp")
    tmp_labels = labels_path.with_name(labels_path.name + ".tmp")
    kg.save_graph(graph, tmp_triples, tmp_labels)
    os.replace(tmp_triples, triples_path)
    os.replace(tmp_labels, labels_path)


# -- manifest ----------------------------------------------------------


def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_subset(config: PipelineConfig, keys: tuple[str, ...]) -> dict:
    subset: dict = {}
    for key in keys:
        if key.startswith("providers."):
            role = key.split(".", 1)[1]
            subset[key] = config.providers.get(role)
        else:
            subset[key] = getattr(config, key)
    return subset


def load_manifest(out: Path) -> dict:
    path = out / MANIFEST_NAME
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    return {"stages": {}}


def save_manifest(out: Path, manifest: dict) -> None:
    _atomic_json(out / MANIFEST_NAME, manifest)


@dataclass
class StageReport:
    stage: str
    input_count: int
    output_count: int
    details: dict = field(default_factory=dict)
    cached: bool = False
    elapsed: float = 0.0

    def line(self) -> str:
        state = "cached" if self.cached else f"{self.elapsed:.2f}s"
        extra = " ".join(f"{key}={value}" for key, value in sorted(self.details.items()))
        return f"[{self.stage}] in={self.input_count} out={self.output_count} ({state}) {extra}".rstrip()


# -- stage implementations --------------------------------------------


def _stage_kg_import(config: PipelineConfig, out: Path) -> StageReport:
    graph = kg.load_graph(config.resolve(config.kg["triples"]), config.resolve(config.kg["labels"]))
    _atomic_graph(graph, out / "kg" / "triples.tsv", out / "kg" / "labels.tsv")
    n_triples = len(graph.triples)
    return StageReport(
        "kg-import", n_triples, n_triples,
        {"entities": len(graph.entities), "relations": len(graph.relations)},
    )


def _load_kg(out: Path) -> kg.KnowledgeGraph:
    return kg.load_graph(out / "kg" / "triples.tsv", out / "kg" / "labels.tsv")


def _stage_templates(config: PipelineConfig, out: Path) -> StageReport:
    graph = _load_kg(out)
    language = config.templates.get("language", "en")
    limit = config.templates.get("limit_per_template", 25)
    threshold = config.templates.get("similarity_threshold", 0.6)
    refine = config.templates.get("refine", True)
    allowed_relations = set(config.templates.get("relations") or graph.relations)
    allowed_entities = set(graph.entities)
    inflector = require_provider(config, "inflect")
    paraphraser = require_provider(config, "paraphrase")

    instances: list[templates.TemplateInstance] = []
    generated = kept = 0
    for template in templates.builtin_templates(language):
        for inputs in templates.gather_inputs(
            graph, template, allowed_entities, allowed_relations, limit, seed=config.seed
        ):
            instance = templates.instantiate(graph, template, inputs)
            generated += 1
            if refine:
                instance = templates.refine_question(instance, inflector, paraphraser)
                if instance.question_refined is not None and not templates.similarity_filter(
                    instance.question_raw, instance.question_refined, threshold
                ):
                    continue
            kept += 1
            instances.append(instance)
    count = _atomic_jsonl(
        out / "templates" / "instances.jsonl",
        (templates.instance_to_dict(instance) for instance in instances),
    )
    return StageReport("templates", generated, count, {"filtered_out": generated - kept})


def _stage_questions(config: PipelineConfig, out: Path) -> StageReport:
    seeds_path = config.questions.get("seeds")
    if not seeds_path:
        raise ConfigError("questions.seeds: required")
    max_completions = config.questions.get("max_completions", 10)
    suggest = require_provider(config, "suggest")
    ner = build_provider(config, "ner")
    seeds = [
        line.strip()
        for line in config.resolve(seeds_path).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    collected: list[questions.CandidateQuestion] = []
    prefix_count = 0
    for seed_question in seeds:
        prefixes = sorted(
            questions.extract_prefixes(seed_question, [ner] if ner else []),
            key=lambda prefix: (prefix.method, prefix.text),
        )
        prefix_count += len(prefixes)
        for prefix in prefixes:
            collected.extend(questions.complete_prefix(prefix, suggest, max_completions))
    unique = questions.dedupe_candidates(collected)
    count = _atomic_jsonl(
        out / "questions" / "candidates.jsonl",
        (
            {
                "question": candidate.text,
                "prefix": candidate.prefix.text,
                "method": candidate.prefix.method,
                "source_question": candidate.prefix.source_question,
                "provider": candidate.provider,
                "response_index": candidate.response_index,
                "drifted": candidate.drifted,
            }
            for candidate in unique
        ),
    )
    return StageReport("questions", len(seeds), count, {"prefixes": prefix_count, "raw": len(collected)})


def _stage_passages(config: PipelineConfig, out: Path) -> StageReport:
    window = config.passages.get("window", passages.WINDOW_WORDS)
    step = config.passages.get("step", passages.STEP_WORDS)
    search = require_provider(config, "article_search")
    fetcher = require_provider(config, "article_fetch")
    reranker = require_provider(config, "rerank")

    rows = list(read_jsonl(out / "questions" / "candidates.jsonl"))
    pool: dict[str, passages.Passage] = {}
    articles: dict[str, passages.Article | None] = {}
    selected_rows: list[dict] = []
    dropped = 0
    for row in rows:
        question = row["question"]
        windows: list[passages.Passage] = []
        for result in passages.find_articles(question, search):
            if result.title not in articles:
                try:
                    articles[result.title] = fetcher.fetch(result.title)
                except Exception as exc:
                    logger.warning("fetch failed for %r: %s", result.title, exc)
                    articles[result.title] = None
            article = articles[result.title]
            if article is None:
                continue
            for piece in passages.segment(article, window, step):
                pool.setdefault(piece.id, piece)
                windows.append(pool[piece.id])
        if not windows:
            dropped += 1
            continue
        ranked = passages.rank_passages(question, windows, reranker)
        top = ranked[0][0]
        selected_rows.append(
            {
                "item_id": question_id(question),
                "question": question,
                "source": NATURAL,
                "passage_id": top.id,
            }
        )
    deduped: dict[str, dict] = {}
    for row in selected_rows:
        deduped.setdefault(row["item_id"], row)
    _atomic_jsonl(out / "passages" / "pool.jsonl", (pool[key].to_dict() for key in sorted(pool)))
    count = _atomic_jsonl(out / "passages" / "candidates.jsonl", deduped.values())
    return StageReport(
        "passages", len(rows), count,
        {"pool": len(pool), "no_articles": dropped, "articles": sum(1 for a in articles.values() if a)},
    )


def _read_pool(out: Path) -> dict[str, passages.Passage]:
    return {
        row["id"]: passages.Passage.from_dict(row)
        for row in read_jsonl(out / "passages" / "pool.jsonl")
    }


def _stage_tag(config: PipelineConfig, out: Path) -> StageReport:
    min_ratio = config.tagging.get("min_ratio", tagging.DEFAULT_MIN_RATIO)
    tagger = require_provider(config, "qa_tag")
    lemmatizer = require_provider(config, "lemma")
    pool = _read_pool(out)
    rows = list(read_jsonl(out / "passages" / "candidates.jsonl"))
    tagged: list[dict] = []
    untagged = ungrounded = 0
    for row in rows:
        passage = pool[row["passage_id"]]
        try:
            quote = tagging.request_tag(row["question"], passage, tagger)
        except tagging.TaggingError as exc:
            logger.info("dropping %s: %s", row["item_id"], exc)
            untagged += 1
            continue
        span, report = tagging.ground_span(passage, quote, lemmatizer, min_ratio)
        if span is None:
            ungrounded += 1
            continue
        example = CandidateExample(
            item_id=row["item_id"],
            question=row["question"],
            source=row["source"],
            passage_id=passage.id,
            passage_text=passage.text,
            answer_text=span.text,
            answer_char_start=span.char_start,
            answer_char_end=span.char_end,
            answer_entities=tagging.extract_answer_entities(passage, span),
            topic_entities=set(),
        )
        tagged.append(
            example.to_dict()
            | {"grounding": {"quote": report.quote, "matched_ratio": report.matched_ratio, "status": report.status}}
        )
    count = _atomic_jsonl(out / "tagging" / "tagged.jsonl", tagged)
    return StageReport("tag", len(rows), count, {"untagged": untagged, "ungrounded": ungrounded})


def _stage_link(config: PipelineConfig, out: Path) -> StageReport:
    threshold = config.linking.get("similarity_threshold", linking.DEFAULT_SIM_THRESHOLD)
    search = require_provider(config, "article_search")
    fetcher = require_provider(config, "article_fetch")
    wiki_search = require_provider(config, "wiki_search")
    pos = require_provider(config, "pos")
    ner = require_provider(config, "ner")
    lemma = require_provider(config, "lemma")
    dep = build_provider(config, "dep")

    rows = list(read_jsonl(out / "tagging" / "tagged.jsonl"))
    linked_rows: list[dict] = []
    for row in rows:
        example = CandidateExample.from_dict(row)
        nbhd = linking.build_neighborhood(example.question, search, fetcher)
        linked = linking.link_entities(
            example.question, pos, ner, lemma, dep, wiki_search, nbhd, threshold
        )
        example.topic_entities = set(linked.all())
        linked_rows.append(
            example.to_dict()
            | {
                "grounding": row.get("grounding"),
                "linked": {
                    "exact": sorted(linked.exact),
                    "named": sorted(linked.named),
                    "nbhd": sorted(linked.nbhd),
                    "comb": sorted(linked.comb),
                },
            }
        )
    count = _atomic_jsonl(out / "linking" / "linked.jsonl", linked_rows)
    with_topics = sum(1 for row in linked_rows if row["topic_entities"])
    return StageReport("link", len(rows), count, {"with_topics": with_topics})


def _read_decisions(paths: list[Path], stage: int) -> list[dict]:
    rows: list[dict] = []
    for path in paths:
        for row in read_jsonl(path):
            if row.get("stage", stage) == stage:
                rows.append(row)
    return rows


def _decision_paths(config: PipelineConfig, key: str) -> list[Path]:
    return [config.resolve(p) for p in config.verification.get(key) or []]


def _stage_verify_export(config: PipelineConfig, out: Path) -> StageReport:
    examples = [CandidateExample.from_dict(row) for row in read_jsonl(out / "linking" / "linked.jsonl")]
    graph = _load_kg(out)
    items1 = [stage1_item(example) for example in examples]
    save_work_items(items1, out / "verify" / "stage1_items.jsonl")

    items2 = []
    stage1_rows = _read_decisions(_decision_paths(config, "stage1_sources"), 1)
    if stage1_rows:
        decisions = [verification.Stage1Decision.from_dict(row) for row in stage1_rows]
        flags = verification.resolve_stage1(
            decisions, config.verification.get("super_annotator", verification.SUPER_ANNOTATOR)
        )
        entity_ids = set()
        for example in examples:
            entity_ids |= example.answer_entities | example.topic_entities
        labels = {eid: graph.entity_label(eid) or eid for eid in entity_ids if eid in graph}
        for example in examples:
            if flags.get(example.item_id) == verification.FLAG_CORRECT:
                items2.append(stage2_item(example, labels))
    save_work_items(items2, out / "verify" / "stage2_items.jsonl")
    return StageReport(
        "verify-export", len(examples), len(items1) + len(items2),
        {"stage1_items": len(items1), "stage2_items": len(items2)},
    )


def _stage_verify_import(config: PipelineConfig, out: Path) -> StageReport:
    super_annotator = config.verification.get("super_annotator", verification.SUPER_ANNOTATOR)
    item_ids = {row["item_id"] for row in read_jsonl(out / "verify" / "stage1_items.jsonl")}

    stage1_rows = _read_decisions(_decision_paths(config, "stage1_sources"), 1)
    if not stage1_rows:
        raise ConfigError("verification.stage1_sources: no stage-1 decisions found")
    unknown = sorted({row["item_id"] for row in stage1_rows} - item_ids)
    if unknown:
        raise PipelineError(f"stage-1 decisions reference unknown items: {unknown[:5]}")
    decisions1 = [verification.Stage1Decision.from_dict(row) for row in stage1_rows]
    flags = verification.resolve_stage1(decisions1, super_annotator)
    _atomic_json(out / "verify" / "stage1_flags.json", flags)

    pairs = []
    by_annotator: dict[str, dict[str, str]] = {}
    for decision in decisions1:
        if decision.annotator_id != super_annotator:
            by_annotator.setdefault(decision.annotator_id, {})[decision.item_id] = decision.flag
    names = sorted(by_annotator)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            shared = set(by_annotator[a]) & set(by_annotator[b])
            if not shared:
                continue
            measured = verification.agreement(by_annotator[a], by_annotator[b], shared)
            pairs.append(
                {"pair": f"{a}|{b}", "n": len(shared), "accuracy": measured.accuracy, "kappa": measured.kappa}
            )
    _atomic_json(out / "verify" / "agreement.json", pairs)

    stage2_rows = _read_decisions(_decision_paths(config, "stage2_sources"), 2)
    decisions2 = [verification.Stage2Decision.from_dict(row) for row in stage2_rows]
    resolved = verification.resolve_stage2(decisions2, super_annotator)
    _atomic_jsonl(
        out / "verify" / "stage2_decisions.jsonl",
        (resolved[item_id].to_dict() | {"stage": 2} for item_id in sorted(resolved)),
    )

    instances = [templates.instance_from_dict(row) for row in read_jsonl(out / "templates" / "instances.jsonl")]
    statuses: dict[str, str] = {}
    template_decisions = config.verification.get("template_decisions")
    if template_decisions:
        for row in read_jsonl(config.resolve(template_decisions)):
            statuses[row["item_id"]] = row["status"]
    verified = []
    for instance in instances:
        status = statuses.get(question_id(instance.question))
        verified.append(templates.set_status(instance, status) if status else instance)
    _atomic_jsonl(out / "verify" / "templates_verified.jsonl", (templates.instance_to_dict(i) for i in verified))
    tally = templates.tally_verification(verified)
    correct = sum(counts[templates.STATUS_CORRECT] for counts in tally.values())
    return StageReport(
        "verify-import", len(stage1_rows) + len(stage2_rows), len(flags) + len(resolved),
        {"stage1_items": len(flags), "stage2_items": len(resolved), "template_correct": correct},
    )


def _stage_assemble(config: PipelineConfig, out: Path) -> StageReport:
    split_seed = config.split.get("seed", config.seed)
    test_fraction = config.split.get("test_fraction", verification.DEFAULT_TEST_FRACTION)

    examples = [CandidateExample.from_dict(row) for row in read_jsonl(out / "linking" / "linked.jsonl")]
    flags = json.loads((out / "verify" / "stage1_flags.json").read_text(encoding="utf-8"))
    routing = verification.apply_stage1(examples, flags)

    resolved = {
        row["item_id"]: verification.Stage2Decision.from_dict(row)
        for row in read_jsonl(out / "verify" / "stage2_decisions.jsonl")
    }
    natural_kbqa = verification.apply_stage2(routing.mrc_pass, resolved)

    template_kbqa: list[KbqaExample] = []
    for row in read_jsonl(out / "verify" / "templates_verified.jsonl"):
        instance = templates.instance_from_dict(row)
        if instance.status != templates.STATUS_CORRECT:
            continue
        template = templates.template_by_name(instance.template)
        template_kbqa.append(
            KbqaExample(
                item_id=question_id(instance.question),
                question=instance.question,
                topic_entities=set(template.entity_inputs(instance.inputs)),
                answer_entities=set(instance.answers),
                source=TEMPLATE,
            )
        )

    pool = _read_pool(out)
    selected = [pool[example.passage_id] for example in routing.ir_pass]
    corpus = passages.build_corpus(list(pool.values()), selected)
    assembled = verification.assemble(
        routing, natural_kbqa + template_kbqa, corpus, split_seed, test_fraction
    )

    datasets_dir = out / "datasets"
    for split_name, bundle in (("train", assembled.train), ("test", assembled.test)):
        _atomic_jsonl(datasets_dir / f"kbqa_{split_name}.jsonl", (ex.to_dict() for ex in bundle.kbqa))
        _atomic_jsonl(datasets_dir / f"mrc_{split_name}.jsonl", (ex.to_dict() for ex in bundle.mrc))
        _atomic_jsonl(datasets_dir / f"ir_{split_name}.jsonl", (ex.to_dict() for ex in bundle.ir))
        qrels = {ex.item_id: {ex.passage_id} for ex in bundle.ir}
        tmp = datasets_dir / f"qrels_{split_name}.tsv.tmp"
        datasets_dir.mkdir(parents=True, exist_ok=True)
        evaluation.write_qrels(qrels, tmp)
        os.replace(tmp, datasets_dir / f"qrels_{split_name}.tsv")
    _atomic_jsonl(datasets_dir / "corpus.jsonl", passages.corpus_export_rows(corpus))

    full = assembled.datasets
    sources = {"natural": 0, "template": 0}
    for example in full.kbqa:
        sources[example.source] = sources.get(example.source, 0) + 1
    summary = {
        "kbqa": {"total": len(full.kbqa), "train": len(assembled.train.kbqa), "test": len(assembled.test.kbqa)},
        "mrc": {"total": len(full.mrc), "train": len(assembled.train.mrc), "test": len(assembled.test.mrc)},
        "ir": {"total": len(full.ir), "train": len(assembled.train.ir), "test": len(assembled.test.ir)},
        "corpus": len(corpus.passages),
        "tombstones": len(corpus.tombstones),
        "kbqa_sources": sources,
        "rejected": len(routing.rejected),
    }
    _atomic_json(datasets_dir / "summary.json", summary)
    return StageReport(
        "assemble", len(examples), len(full.ir) + len(full.mrc) + len(full.kbqa),
        {"ir": len(full.ir), "mrc": len(full.mrc), "kbqa": len(full.kbqa), "corpus": len(corpus.passages)},
    )


def _read_examples(path: Path) -> list[KbqaExample]:
    return [KbqaExample.from_dict(row) for row in read_jsonl(path)]


def _stage_kg_sample(config: PipelineConfig, out: Path) -> StageReport:
    hops = config.kg.get("hops", 2)
    graph = _load_kg(out)
    examples = _read_examples(out / "datasets" / "kbqa_train.jsonl") + _read_examples(
        out / "datasets" / "kbqa_test.jsonl"
    )
    sampled = kg.sample_dataset_kg(graph, examples, hops)
    _atomic_graph(sampled, out / "dataset_kg" / "triples.tsv", out / "dataset_kg" / "labels.tsv")
    n_triples = len(sampled.triples)
    return StageReport(
        "kg-sample", len(examples), n_triples,
        {"entities": len(sampled.entities), "full_entities": len(graph.entities)},
    )


def _load_dataset_kg(out: Path) -> kg.KnowledgeGraph:
    return kg.load_graph(out / "dataset_kg" / "triples.tsv", out / "dataset_kg" / "labels.tsv")


def _stage_eval_kbqa(config: PipelineConfig, out: Path) -> StageReport:
    responses_path = config.eval.get("responses")
    if not responses_path:
        raise ConfigError("eval.responses: required (JSON mapping item_id to model response)")
    use_kg = bool(config.eval.get("use_kg", False))
    language = config.eval.get("language", "en")
    k = config.eval.get("triples_k", evaluation.DEFAULT_TRIPLES)
    hops = config.eval.get("hops", config.kg.get("hops", 2))

    graph = _load_dataset_kg(out)
    examples = sorted(_read_examples(out / "datasets" / "kbqa_test.jsonl"), key=lambda ex: ex.item_id)
    responses = json.loads(config.resolve(responses_path).read_text(encoding="utf-8"))
    missing = [ex.item_id for ex in examples if ex.item_id not in responses]
    if missing:
        raise PipelineError(f"eval.responses is missing {len(missing)} item(s), first: {missing[:3]}")

    embedder = require_provider(config, "embed")
    prompts = []
    for example in examples:
        context = None
        if use_kg:
            context = evaluation.retrieve_triples(
                graph, example.question, example.topic_entities, hops, embedder, k
            )
        prompts.append(
            {
                "item_id": example.item_id,
                "prompt": evaluation.build_kbqa_prompt(example.question, context, language),
                "triples": len(context.triples) if context else 0,
            }
        )
    _atomic_jsonl(out / "eval" / "kbqa_prompts.jsonl", prompts)

    gold = evaluation.gold_from_examples(examples, graph)
    accuracy = evaluation.kbqa_accuracy(responses, gold)
    metrics = {"accuracy": accuracy, "n": len(examples), "with_kg": use_kg}
    _atomic_json(out / "eval" / "kbqa_metrics.json", metrics)
    return StageReport("eval-kbqa", len(examples), len(prompts), {"accuracy": round(accuracy, 4)})


def _stage_eval_mrc(config: PipelineConfig, out: Path) -> StageReport:
    predictions_path = config.eval.get("predictions")
    if not predictions_path:
        raise ConfigError("eval.predictions: required (JSON mapping item_id to answer text)")
    golds = {
        row["item_id"]: row["answer_text"] for row in read_jsonl(out / "datasets" / "mrc_test.jsonl")
    }
    predictions = json.loads(config.resolve(predictions_path).read_text(encoding="utf-8"))
    scores = evaluation.mrc_scores(predictions, golds)
    metrics = {"exact_match": scores.exact_match, "f1": scores.f1, "n": len(golds)}
    _atomic_json(out / "eval" / "mrc_metrics.json", metrics)
    return StageReport(
        "eval-mrc", len(golds), len(golds),
        {"em": round(scores.exact_match, 4), "f1": round(scores.f1, 4)},
    )


def _stage_eval_ir(config: PipelineConfig, out: Path) -> StageReport:
    k_values = config.eval.get("k_values", [1, 5, 10])
    docs = {row["id"]: row["text"] for row in read_jsonl(out / "datasets" / "corpus.jsonl")}
    queries = [
        (row["item_id"], row["question"]) for row in read_jsonl(out / "datasets" / "ir_test.jsonl")
    ]
    index = evaluation.bm25_index(docs)
    rankings = [
        evaluation.bm25_search(index, question, query_id=query_id) for query_id, question in queries
    ]
    tmp = out / "eval" / "ir_rankings.tsv.tmp"
    (out / "eval").mkdir(parents=True, exist_ok=True)
    evaluation.write_rankings(rankings, tmp)
    os.replace(tmp, out / "eval" / "ir_rankings.tsv")
    qrels = evaluation.read_qrels(out / "datasets" / "qrels_test.tsv")
    metrics = evaluation.ir_metrics({r.query_id: r for r in rankings}, qrels, k_values)
    metrics["n"] = len(queries)
    _atomic_json(out / "eval" / "ir_metrics.json", metrics)
    shown = {key: round(value, 4) for key, value in metrics.items() if key.startswith("ndcg")}
    return StageReport("eval-ir", len(queries), len(rankings), shown)


# -- stage registry ----------------------------------------------------


@dataclass(frozen=True)
class StageDef:
    name: str
    deps: tuple[str, ...]
    config_keys: tuple[str, ...]
    outputs: tuple[str, ...]
    run: object
    external: object = None  # fn(config) -> list[Path]


def _ext_kg(config: PipelineConfig) -> list[Path]:
    return [config.resolve(config.kg["triples"]), config.resolve(config.kg["labels"])]


def _ext_provider_paths(*roles):
    def inner(config: PipelineConfig) -> list[Path]:
        found = []
        for role in roles:
            spec = config.providers.get(role) or {}
            if "path" in spec:
                found.append(config.resolve(spec["path"]))
        return found

    return inner


def _ext_questions(config: PipelineConfig) -> list[Path]:
    paths = _ext_provider_paths("suggest", "ner")(config)
    if config.questions.get("seeds"):
        paths.append(config.resolve(config.questions["seeds"]))
    return paths


def _ext_decisions(*keys):
    def inner(config: PipelineConfig) -> list[Path]:
        found = []
        for key in keys:
            if key == "template_decisions":
                continue
            for path in _decision_paths(config, key):
                if path.exists():
                    found.append(path)
        extra = config.verification.get("template_decisions")
        if "template_decisions" in keys and extra:
            path = config.resolve(extra)
            if path.exists():
                found.append(path)
        return found

    return inner


def _ext_eval(key):
    def inner(config: PipelineConfig) -> list[Path]:
        value = config.eval.get(key)
        return [config.resolve(value)] if value else []

    return inner


STAGES: dict[str, StageDef] = {}


def _register(name, deps, config_keys, outputs, run, external=None):
    STAGES[name] = StageDef(name, tuple(deps), tuple(config_keys), tuple(outputs), run, external)


_register("kg-import", (), ("kg",), ("kg/triples.tsv", "kg/labels.tsv"), _stage_kg_import, _ext_kg)
_register(
    "templates", ("kg-import",),
    ("seed", "templates", "providers.inflect", "providers.paraphrase", "providers.llm"),
    ("templates/instances.jsonl",), _stage_templates, _ext_provider_paths("inflect", "paraphrase"),
)
_register(
    "questions", (), ("seed", "questions", "providers.suggest", "providers.ner"),
    ("questions/candidates.jsonl",), _stage_questions, _ext_questions,
)
_register(
    "passages", ("questions",),
    ("passages", "providers.article_search", "providers.article_fetch", "providers.rerank"),
    ("passages/pool.jsonl", "passages/candidates.jsonl"), _stage_passages,
    _ext_provider_paths("article_search", "article_fetch"),
)
_register(
    "tag", ("passages",), ("tagging", "providers.qa_tag", "providers.lemma", "providers.llm"),
    ("tagging/tagged.jsonl",), _stage_tag, _ext_provider_paths("qa_tag", "lemma"),
)
_register(
    "link", ("tag", "kg-import"),
    ("linking", "providers.article_search", "providers.article_fetch", "providers.wiki_search",
     "providers.pos", "providers.ner", "providers.lemma", "providers.dep"),
    ("linking/linked.jsonl",), _stage_link,
    _ext_provider_paths("article_search", "article_fetch", "wiki_search", "lemma"),
)
_register(
    "verify-export", ("link", "kg-import"), ("verification",),
    ("verify/stage1_items.jsonl", "verify/stage2_items.jsonl"), _stage_verify_export,
    _ext_decisions("stage1_sources"),
)
_register(
    "verify-import", ("verify-export", "templates"), ("verification",),
    ("verify/stage1_flags.json", "verify/stage2_decisions.jsonl",
     "verify/templates_verified.jsonl", "verify/agreement.json"),
    _stage_verify_import, _ext_decisions("stage1_sources", "stage2_sources", "template_decisions"),
)
_register(
    "assemble", ("verify-import", "link", "passages"), ("seed", "split"),
    ("datasets/kbqa_train.jsonl", "datasets/kbqa_test.jsonl", "datasets/mrc_train.jsonl",
     "datasets/mrc_test.jsonl", "datasets/ir_train.jsonl", "datasets/ir_test.jsonl",
     "datasets/qrels_train.tsv", "datasets/qrels_test.tsv", "datasets/corpus.jsonl",
     "datasets/summary.json"),
    _stage_assemble,
)
_register(
    "kg-sample", ("assemble", "kg-import"), ("kg",),
    ("dataset_kg/triples.tsv", "dataset_kg/labels.tsv"), _stage_kg_sample,
)
_register(
    "eval-kbqa", ("assemble", "kg-sample"), ("eval", "providers.embed"),
    ("eval/kbqa_prompts.jsonl", "eval/kbqa_metrics.json"), _stage_eval_kbqa, _ext_eval("responses"),
)
_register(
    "eval-mrc", ("assemble",), ("eval",), ("eval/mrc_metrics.json",), _stage_eval_mrc,
    _ext_eval("predictions"),
)
_register(
    "eval-ir", ("assemble",), ("eval",), ("eval/ir_rankings.tsv", "eval/ir_metrics.json"), _stage_eval_ir)

STAGE_ORDER = tuple(STAGES)


# -- running -----------------------------------------------------------


def _stage_inputs(config: PipelineConfig, out: Path, stage: StageDef) -> list[Path]:
    found: list[Path] = []
    for dep in stage.deps:
        for rel in STAGES[dep].outputs:
            found.append(out / rel)
    if stage.external:
        found.extend(stage.external(config))
    return found


def _fingerprint(config: PipelineConfig, out: Path, stage: StageDef) -> str:
    subset = _config_subset(config, stage.config_keys)
    parts = {"stage": stage.name, "config": subset, "files": {}}
    for path in sorted(_stage_inputs(config, out, stage)):
        if not path.exists():
            raise PipelineError(f"missing input for {stage.name}: {path}")
        for prefix, base in (("out", out), ("cfg", config.base_dir)):
            try:
                key = f"{prefix}:{path.relative_to(base).as_posix()}"
                break
            except ValueError:
                key = str(path)
        parts["files"][key] = _hash_file(path)
    return hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode("utf-8")).hexdigest()


def _outputs_exist(out: Path, stage: StageDef) -> bool:
    return all((out / rel).exists() for rel in stage.outputs)


def run_stage(config: PipelineConfig, name: str, force: bool = False) -> StageReport:
    if name not in STAGES:
        raise ConfigError(f"unknown stage {name!r}; choose from {', '.join(STAGE_ORDER)}")
    stage = STAGES[name]
    out = _out(config)
    out.mkdir(parents=True, exist_ok=True)
    for dep in stage.deps:
        if not _outputs_exist(out, STAGES[dep]):
            raise PipelineError(f"stage {name!r} needs outputs of {dep!r}; run it first")
    manifest = load_manifest(out)
    fingerprint = _fingerprint(config, out, stage)
    entry = manifest["stages"].get(name)
    if not force and entry and entry.get("fingerprint") == fingerprint and _outputs_exist(out, stage):
        report = StageReport(name, 0, 0, entry.get("details", {}), cached=True)
        report.input_count = entry.get("input_count", 0)
        report.output_count = entry.get("output_count", 0)
        return report
    started = time.monotonic()
    report = stage.run(config, out)
    report.elapsed = time.monotonic() - started
    manifest = load_manifest(out)
    manifest["stages"][name] = {
        "fingerprint": fingerprint,
        "outputs": list(stage.outputs),
        "input_count": report.input_count,
        "output_count": report.output_count,
        "details": report.details,
    }
    save_manifest(out, manifest)
    return report


def plan(config: PipelineConfig, target: str) -> list[tuple[str, str]]:
    """Topological closure of the target's dependencies with per-stage cache
    status: cached, run, or blocked (an external input is missing)."""
    if target not in STAGES:
        raise ConfigError(f"unknown stage {target!r}; choose from {', '.join(STAGE_ORDER)}")
    closure: list[str] = []
    seen: set[str] = set()

    def visit(name: str) -> None:
        if name in seen:
            return
        seen.add(name)
        for dep in STAGES[name].deps:
            visit(dep)
        closure.append(name)

    visit(target)
    closure.sort(key=STAGE_ORDER.index)
    out = _out(config)
    manifest = load_manifest(out)
    statuses: list[tuple[str, str]] = []
    pending: set[str] = set()
    for name in closure:
        stage = STAGES[name]
        if any(dep in pending for dep in stage.deps):
            statuses.append((name, "run"))
            pending.add(name)
            continue
        try:
            fingerprint = _fingerprint(config, out, stage)
        except PipelineError:
            statuses.append((name, "blocked"))
            pending.add(name)
            continue
        entry = manifest["stages"].get(name)
        if entry and entry.get("fingerprint") == fingerprint and _outputs_exist(out, stage):
            statuses.append((name, "cached"))
        else:
            statuses.append((name, "run"))
            pending.add(name)
    return statuses


def dataset_stats(config: PipelineConfig) -> dict:
    """Sizes and entity coverage of the assembled datasets, plus the
    per-template distribution of the template subset."""
    out = _out(config)
    summary_path = out / "datasets" / "summary.json"
    if not summary_path.exists():
        raise PipelineError("no assembled datasets; run the assemble stage first")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    kbqa = _read_examples(out / "datasets" / "kbqa_train.jsonl") + _read_examples(
        out / "datasets" / "kbqa_test.jsonl"
    )
    topic = set()
    answer = set()
    natural_answer = set()
    for example in kbqa:
        topic |= example.topic_entities
        answer |= example.answer_entities
        if example.source == NATURAL:
            natural_answer |= example.answer_entities
    by_template: dict[str, int] = {}
    verified_path = out / "verify" / "templates_verified.jsonl"
    if verified_path.exists():
        wanted = {example.item_id for example in kbqa if example.source == TEMPLATE}
        for row in read_jsonl(verified_path):
            instance = templates.instance_from_dict(row)
            if question_id(instance.question) in wanted:
                by_template[instance.template] = by_template.get(instance.template, 0) + 1
    return {
        "sizes": {key: summary[key] for key in ("kbqa", "mrc", "ir")},
        "corpus": summary.get("corpus", 0),
        "unique_topic_entities": len(topic),
        "unique_answer_entities": len(answer),
        "kbqa_sources": summary.get("kbqa_sources", {}),
        "templates": dict(sorted(by_template.items())),
        "natural": {"unique_answer_entities": len(natural_answer)},
    }
