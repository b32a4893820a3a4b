"""Builds fixtures/world: a small self-consistent world for end-to-end runs.

The script writes a knowledge graph, articles with entity links, replay files
for every provider, seed questions, annotation decisions, and evaluation
response files, then drives the real pipeline over them once (in a scratch
directory) to make sure everything lines up. Committed output is input data
only; tests re-run the pipeline themselves.

Run from the repository root:  python3 scripts/build_fixture_world.py
"""

from __future__ import annotations

import hashlib
import json
import shutil
import sys
import tempfile
from pathlib import Path

import yaml

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from kbqakit import pipeline, templates  # noqa: E402
from kbqakit.kg import KnowledgeGraph, load_graph, save_graph  # noqa: E402
from kbqakit.records import question_id, read_jsonl  # noqa: E402
from kbqakit.text import normalize_question, tokenize  # noqa: E402

WORLD = ROOT / "fixtures" / "world"
SEED = 7

# -- world data --------------------------------------------------------

OCCUPATIONS = {
    "Q1401": "composer",
    "Q1402": "painter",
    "Q1403": "writer",
    "Q1404": "chemist",
    "Q1405": "architect",
}
CLASSES = {"Q1601": "metropolis", "Q1602": "city", "Q1603": "country", "Q1604": "human"}
CAUSES = {"Q1611": "pneumonia", "Q1612": "tuberculosis", "Q1613": "heart failure"}
COUNTRIES = {
    "Q1301": ("Poland", "Q1201"),
    "Q1302": ("Austria", "Q1203"),
    "Q1303": ("Germany", "Q1205"),
    "Q1304": ("France", "Q1207"),
}
CITIES = {
    "Q1201": ("Warsaw", "Q1301", "Q1601"),
    "Q1202": ("Krakow", "Q1301", "Q1602"),
    "Q1203": ("Vienna", "Q1302", "Q1601"),
    "Q1204": ("Graz", "Q1302", "Q1602"),
    "Q1205": ("Berlin", "Q1303", "Q1601"),
    "Q1206": ("Leipzig", "Q1303", "Q1602"),
    "Q1207": ("Paris", "Q1304", "Q1601"),
    "Q1208": ("Lyon", "Q1304", "Q1602"),
}

# person: id -> (name, occupation, birth, death, citizenship, teacher, cause, father, mother, sibling)
PEOPLE = {
    "Q1101": ("Aurelia Nowak", "Q1401", "Q1202", "Q1203", "Q1301", "Q1102", "Q1612", "Q1115", "Q1116", None),
    "Q1102": ("Bruno Keller", "Q1401", "Q1204", "Q1203", "Q1302", "Q1103", "Q1611", None, None, None),
    "Q1103": ("Clara Lindmark", "Q1401", "Q1206", "Q1205", "Q1303", None, None, None, None, None),
    "Q1104": ("Dorian Malet", "Q1402", "Q1208", "Q1207", "Q1304", "Q1105", None, None, None, None),
    "Q1105": ("Elise Charbonneau", "Q1402", "Q1207", "Q1207", "Q1304", None, "Q1613", None, None, None),
    "Q1106": ("Feliks Ostrowski", "Q1403", "Q1201", "Q1202", "Q1301", None, "Q1613", None, None, None),
    "Q1107": ("Greta Hoffmann", "Q1404", "Q1205", "Q1206", "Q1303", None, None, None, None, None),
    "Q1108": ("Hugo Brandt", "Q1405", "Q1203", "Q1204", "Q1302", "Q1109", None, None, None, None),
    "Q1109": ("Irena Sokolowska", "Q1405", "Q1201", "Q1201", "Q1301", None, None, None, None, None),
    "Q1110": ("Jonas Weber", "Q1401", "Q1205", "Q1207", "Q1303", "Q1103", "Q1611", None, None, None),
    "Q1111": ("Katarzyna Lis", "Q1403", "Q1202", "Q1201", "Q1301", None, None, None, None, "Q1112"),
    "Q1112": ("Leon Lis", "Q1401", "Q1202", "Q1202", "Q1301", "Q1101", None, None, None, "Q1111"),
    "Q1115": ("Henryk Nowak", "Q1401", "Q1201", "Q1202", "Q1301", None, "Q1612", None, None, None),
    "Q1116": ("Zofia Nowak", "Q1402", "Q1202", "Q1202", "Q1301", None, None, None, None, None),
}
EXTRA_STUDENTS = [("Q1102", "Q1110")]  # Jonas studied under Bruno as well

RELATIONS = {
    "P17": "country",
    "P19": "place of birth",
    "P20": "place of death",
    "P22": "father",
    "P25": "mother",
    "P27": "country of citizenship",
    "P31": "instance of",
    "P36": "capital",
    "P106": "occupation",
    "P509": "cause of death",
    "P735": "given name",
    "P802": "student",
    "P1066": "teacher",
    "P3373": "sibling",
}

FILLER_PERSON = [
    "Letters from this period survive in private collections and describe a steady routine "
    "of morning work, long walks by the river, and evenings spent among close friends.",
    "Early reviews were mixed, yet within a decade the name carried real weight in the "
    "concert halls and salons of the region, and commissions arrived from abroad.",
    "A small museum now keeps manuscripts, sketches, and personal effects, and scholars "
    "still argue about the dating of several early works found in an attic trunk.",
    "Contemporaries remembered a reserved manner in public and a sharp, generous wit in "
    "private, along with an unusual devotion to long revisions of finished pieces.",
]
FILLER_CITY = [
    "The old market square draws visitors through the year, and the university quarter "
    "keeps a lively rhythm of lectures, bookshops, and crowded cafes along narrow streets.",
    "A river divides the historic center from the newer districts, and iron bridges from "
    "the last century still carry trams across it every few minutes.",
    "Local archives hold charters, maps, and guild records reaching back centuries, and "
    "the reading room remains open to anyone with patience for old handwriting.",
]


def build_graph() -> KnowledgeGraph:
    graph = KnowledgeGraph()
    for rid, label in RELATIONS.items():
        graph.add_relation(rid, label)
    for eid, label in {**OCCUPATIONS, **CLASSES, **CAUSES}.items():
        graph.add_entity(eid, label)
    for eid, (label, capital) in COUNTRIES.items():
        graph.add_entity(eid, label)
        graph.add_triple(eid, "P31", "Q1603")
        graph.add_triple(eid, "P36", capital)
    for eid, (label, country, klass) in CITIES.items():
        graph.add_entity(eid, label)
        graph.add_triple(eid, "P17", country)
        graph.add_triple(eid, "P31", klass)
    given_ids: dict[str, str] = {}
    for index, (eid, row) in enumerate(sorted(PEOPLE.items())):
        name = row[0]
        first = name.split()[0]
        if first not in given_ids:
            gid = f"Q15{index:02d}"
            given_ids[first] = gid
            graph.add_entity(gid, first)
        graph.add_entity(eid, name)
        graph.add_triple(eid, "P31", "Q1604")
        graph.add_triple(eid, "P735", given_ids[first])
    for eid, (name, occ, birth, death, cit, teacher, cause, father, mother, sibling) in PEOPLE.items():
        graph.add_triple(eid, "P106", occ)
        graph.add_triple(eid, "P19", birth)
        graph.add_triple(eid, "P20", death)
        graph.add_triple(eid, "P27", cit)
        if teacher:
            graph.add_triple(eid, "P1066", teacher)
            graph.add_triple(teacher, "P802", eid)
        if cause:
            graph.add_triple(eid, "P509", cause)
        if father:
            graph.add_triple(eid, "P22", father)
        if mother:
            graph.add_triple(eid, "P25", mother)
        if sibling:
            graph.add_triple(eid, "P3373", sibling)
    for teacher, student in EXTRA_STUDENTS:
        graph.add_triple(teacher, "P802", student)
        graph.add_triple(student, "P1066", teacher)
    return graph


# -- articles ----------------------------------------------------------


class ArticleBuilder:
    def __init__(self, title: str, page_id: str):
        self.title = title
        self.page_id = page_id
        self.words: list[str] = []
        self.links: list[list] = []

    def text(self, sentence: str) -> "ArticleBuilder":
        self.words.extend(sentence.split())
        return self

    def entity(self, entity_id: str, label: str, tail: str = "") -> "ArticleBuilder":
        start = len(self.words)
        parts = label.split()
        self.words.extend(parts)
        self.links.append([start, start + len(parts), entity_id, label])
        if tail:
            self.words[-1] = self.words[-1] + tail
        return self

    def to_dict(self) -> dict:
        return {"title": self.title, "page_id": self.page_id, "words": self.words, "links": self.links}


def build_articles(graph: KnowledgeGraph) -> dict[str, dict]:
    def label(eid: str) -> str:
        return graph.entity_label(eid)

    articles: dict[str, dict] = {}
    for eid, (name, occ, birth, death, cit, teacher, cause, *_rest) in sorted(PEOPLE.items()):
        art = ArticleBuilder(name, eid)
        art.entity(eid, name).text("was a").entity(occ, label(occ)).text("born in")
        art.entity(birth, label(birth), tail=".")
        art.text("The family kept a modest house there, and the city of")
        art.entity(birth, label(birth)).text("shaped the earliest memories and habits of the future")
        art.text(label(occ) + ".")
        if teacher:
            art.text("For several years").entity(eid, name).text("studied under")
            art.entity(teacher, label(teacher), tail=",").text("whose strict lessons left a lasting mark.")
        capital = COUNTRIES[cit][1]
        art.text("Critics writing in").entity(capital, label(capital)).text("followed each new work closely,")
        art.text("and the citizenship of").entity(cit, label(cit)).text("was a point of quiet pride.")
        art.text(FILLER_PERSON[int(eid[1:]) % len(FILLER_PERSON)])
        art.text("Late in life").entity(eid, name).text("settled in")
        art.entity(death, label(death), tail=",").text("rarely traveling far from its walls.")
        if cause:
            art.entity(eid, name).text("died of").entity(cause, label(cause)).text("in")
            art.entity(death, label(death), tail=".")
        else:
            art.entity(eid, name).text("died peacefully in").entity(death, label(death), tail=".")
        art.text(FILLER_PERSON[(int(eid[1:]) + 1) % len(FILLER_PERSON)])
        articles[name] = art.to_dict()

    for cid, (cname, country, klass) in sorted(CITIES.items()):
        art = ArticleBuilder(cname, cid)
        art.entity(cid, cname).text("is a").entity(klass, label(klass)).text("in")
        art.entity(country, label(country), tail=".")
        capital = COUNTRIES[country][1]
        art.text("The capital of").entity(country, label(country)).text("is")
        art.entity(capital, label(capital), tail=".")
        residents = [
            pid for pid, row in sorted(PEOPLE.items()) if row[2] == cid or row[3] == cid
        ]
        if residents:
            art.text("Among the figures who lived or worked here were")
            for index, pid in enumerate(residents[:3]):
                sep = "," if index < min(len(residents), 3) - 1 else "."
                art.entity(pid, label(pid), tail=sep)
        art.text(FILLER_CITY[int(cid[1:]) % len(FILLER_CITY)])
        art.text(FILLER_CITY[(int(cid[1:]) + 1) % len(FILLER_CITY)])
        articles[cname] = art.to_dict()
    return articles


# -- natural questions -------------------------------------------------


def natural_questions(graph: KnowledgeGraph) -> list[str]:
    out: list[str] = []
    for eid, (name, _occ, _birth, _death, _cit, teacher, cause, father, mother, sibling) in sorted(PEOPLE.items()):
        out.append(f"Where was {name} born")
        out.append(f"Where did {name} die")
        out.append(f"What was the occupation of {name}")
        if teacher:
            out.append(f"Who was the teacher of {name}")
        if cause:
            out.append(f"What was the cause of death of {name}")
        if father:
            out.append(f"Who was the father of {name}")
        if mother:
            out.append(f"Who was the mother of {name}")
        if sibling:
            out.append(f"Who was the sibling of {name}")
    for _eid, (cname, _country) in sorted(COUNTRIES.items()):
        out.append(f"What is the capital of {cname}")
    for _cid, (cname, _country, _klass) in sorted(CITIES.items()):
        out.append(f"In which country is {cname}")
    return out


SEED_QUESTIONS = [
    "Where was Aurelia Nowak born",
    "Who was the teacher of Bruno Keller",
    "What is the capital of Poland",
    "Where did Clara Lindmark die",
    "What was the cause of death of Feliks Ostrowski",
    "In which country is Krakow",
    "Who was the teacher of Dorian Malet",
    "Where was Leon Lis born",
    "What is the capital of Austria",
    "Where did Hugo Brandt die",
    "What was the occupation of Jonas Weber",
    "Who was the sibling of Katarzyna Lis",
    "Where did Elise Charbonneau die",
    "In which country is Lyon",
    "Who was the father of Aurelia Nowak",
]

DRIFTED = {
    "Where was Aurelia": ["birthplace of Aurelia Nowak"],
    "What is the": ["history of the old market square"],
}


def build_suggest_map(questions: list[str], seeds: list[str]) -> dict[str, list[str]]:
    from kbqakit.providers import CapitalizedNer
    from kbqakit.questions import extract_prefixes

    ner = CapitalizedNer()
    mapping: dict[str, list[str]] = {}
    for seed_question in seeds:
        for prefix in sorted(extract_prefixes(seed_question, [ner]), key=lambda p: p.text):
            matches = [q for q in questions if q.casefold().startswith(prefix.text.casefold())]
            extra = DRIFTED.get(prefix.text, [])
            if matches or extra:
                mapping[prefix.text] = matches[:12] + extra
    return mapping


def build_search_map(articles: dict[str, dict], questions: list[str]) -> dict[str, list[dict]]:
    """Ranks articles for each question by word overlap with the article text."""
    stop = {"the", "of", "was", "is", "did", "in", "a", "what", "where", "who", "which", "country"}
    body_tokens = {
        title: set(tokenize(" ".join(art["words"]))) for title, art in articles.items()
    }
    mapping: dict[str, list[dict]] = {}
    for question in questions:
        wanted = [t for t in tokenize(question) if t not in stop]
        scored = []
        for title, tokens in sorted(body_tokens.items()):
            hits = sum(1 for t in wanted if t in tokens)
            if hits:
                scored.append((-hits, title))
        scored.sort()
        rows = [
            {"title": title, "url": f"https://en.wikipedia.org/wiki/{title.replace(' ', '_')}"}
            for _score, title in scored[:6]
        ]
        mapping[normalize_question(question)] = rows
    # a couple of questions return nothing, to exercise the drop path
    for question in questions:
        if "Greta Hoffmann" in question:
            mapping[normalize_question(question)] = []
    return mapping


def build_wiki_search_map(graph: KnowledgeGraph) -> dict[str, list[dict]]:
    stop = {"the", "of"}
    mapping: dict[str, list[dict]] = {}

    def add(key: str, eid: str, title: str) -> None:
        rows = mapping.setdefault(key.casefold(), [])
        if all(row["entity_id"] != eid for row in rows) and len(rows) < 5:
            rows.append({"title": title, "entity_id": eid})

    for eid in sorted(graph.entities):
        title = graph.entity_label(eid)
        if not title:
            continue
        add(title, eid, title)
        for word in title.split():
            if len(word) > 2 and word.casefold() not in stop:
                add(word, eid, title)
    return mapping


# -- consistency-driven pieces (need pipeline output) ------------------


def _bucket(item_id: str, salt: str, size: int) -> int:
    digest = hashlib.sha256(f"{salt}:{item_id}".encode("utf-8")).digest()
    return digest[0] % size


def build_qa_tag_map(out: Path) -> dict[str, str]:
    from kbqakit.passages import Passage

    pool = {row["id"]: Passage.from_dict(row) for row in read_jsonl(out / "passages" / "pool.jsonl")}
    stop = {"the", "of", "was", "is", "did", "in", "a", "what", "where", "who", "which"}
    mapping: dict[str, str] = {}
    for row in read_jsonl(out / "passages" / "candidates.jsonl"):
        passage = pool[row["passage_id"]]
        bucket = _bucket(row["item_id"], "tag", 20)
        if bucket == 0:
            continue  # no reply recorded: provider error path
        words = passage.words
        wanted = {t for t in tokenize(row["question"]) if t not in stop}
        best_start, best_hits = 0, -1
        for start in range(0, max(1, len(words) - 8)):
            window = words[start : start + 8]
            hits = sum(1 for w in window if tokenize(w) and tokenize(w)[0] in wanted)
            has_link = any(
                link.word_start < start + 8 and start < link.word_end for link in passage.links
            )
            score = hits + (2 if has_link else 0)
            if score > best_hits:
                best_hits, best_start = score, start
        quote_words = words[best_start : best_start + 8]
        if bucket == 1:
            quote_words = list(reversed(quote_words))  # will not ground
        mapping[normalize_question(row["question"])] = " ".join(quote_words)
    return mapping


def build_stage_decisions(out: Path, force_correct: set[str]) -> tuple[list[dict], list[dict]]:
    linked = list(read_jsonl(out / "linking" / "linked.jsonl"))
    flags = ["correct", "incorrect_fragment", "incorrect_question", "incorrect_passage"]
    stage1: list[dict] = []
    stage2: list[dict] = []
    for row in linked:
        item_id = row["item_id"]
        forced = item_id in force_correct
        bucket = _bucket(item_id, "flag", 10)
        flag = flags[0] if bucket < 7 else flags[1] if bucket == 7 else flags[2] if bucket == 8 else flags[3]
        if forced:
            flag = "correct"
        elif not row["answer_entities"] and flag == "correct" and _bucket(item_id, "strip", 2) == 0:
            flag = "incorrect_fragment"
        disagree = _bucket(item_id, "conflict", 12) == 0
        other = flags[(flags.index(flag) + 1) % 4] if disagree else flag
        stage1.append({"stage": 1, "item_id": item_id, "annotator_id": "anna", "flag": flag, "timestamp": "t1"})
        stage1.append({"stage": 1, "item_id": item_id, "annotator_id": "piotr", "flag": other, "timestamp": "t1"})
        if disagree:
            stage1.append(
                {"stage": 1, "item_id": item_id, "annotator_id": "super", "flag": flag, "timestamp": "t2"}
            )
        if flag == "correct":
            answers = sorted(row["answer_entities"])
            topics = sorted(row["topic_entities"])
            drop_answers = not forced and _bucket(item_id, "s2a", 8) < 2
            drop_topics = not forced and _bucket(item_id, "s2t", 9) < 2
            stage2.append(
                {
                    "stage": 2,
                    "item_id": item_id,
                    "annotator_id": "anna",
                    "accepted_answer_entities": [] if drop_answers else answers,
                    "accepted_topic_entities": [] if drop_topics else topics,
                    "rejected": False,
                    "timestamp": "t3",
                }
            )
    return stage1, stage2


def pick_twin_question(out: Path) -> str | None:
    """A template question whose subject also works as a suggested natural
    question; lands in both lanes so assembly has a duplicate to fold."""
    article_backed = set(PEOPLE) | set(CITIES) | set(COUNTRIES)
    verbalized = {"P17", "P19", "P20", "P27", "P36", "P106"}
    for row in read_jsonl(out / "templates" / "instances.jsonl"):
        instance = templates.instance_from_dict(row)
        if instance.template != "one-hop":
            continue
        if _bucket(question_id(instance.question), "tstatus", 10) >= 8:
            continue
        if instance.inputs.get("entity") in article_backed and instance.inputs.get("relation") in verbalized:
            return instance.question
    return None


def build_template_decisions(out: Path) -> list[dict]:
    rows = []
    for row in read_jsonl(out / "templates" / "instances.jsonl"):
        instance = templates.instance_from_dict(row)
        item_id = question_id(instance.question)
        bucket = _bucket(item_id, "tstatus", 10)
        status = "correct" if bucket < 8 else "incorrect" if bucket == 8 else "resembling"
        rows.append({"item_id": item_id, "status": status})
    return rows


def build_paraphrase_map(graph: KnowledgeGraph, config_templates: dict) -> dict[str, str]:
    """Rewrites for a slice of the raw template questions; one rewrite is
    deliberately dissimilar so the filter has something to drop."""
    mapping: dict[str, str] = {}
    language = config_templates["language"]
    limit = config_templates["limit_per_template"]
    allowed_relations = set(graph.relations)
    allowed_entities = set(graph.entities)
    raws: list[str] = []
    for template in templates.builtin_templates(language):
        for inputs in templates.gather_inputs(
            graph, template, allowed_entities, allowed_relations, limit, seed=SEED
        ):
            raws.append(templates.instantiate(graph, template, inputs).question_raw)
    for index, raw in enumerate(sorted(set(raws))):
        if index % 4 == 0 and raw.startswith("What is the "):
            mapping[raw] = "What is the " + raw[len("What is the "):].rstrip("?") + ", exactly?"
        elif index % 7 == 3:
            mapping[raw] = raw.rstrip("?") + " then?"
    if raws:
        mapping[sorted(set(raws))[0]] = "Completely unrelated text about weather patterns"
    return mapping


def build_eval_files(out: Path, graph: KnowledgeGraph) -> tuple[dict, dict]:
    responses: dict[str, str] = {}
    for row in read_jsonl(out / "datasets" / "kbqa_test.jsonl"):
        labels = [graph.entity_label(eid) or eid for eid in sorted(row["answer_entities"])]
        if _bucket(row["item_id"], "resp", 10) < 7:
            responses[row["item_id"]] = "The answer is " + ", ".join(labels) + "."
        else:
            responses[row["item_id"]] = "The answer is not recorded anywhere."
    predictions: dict[str, str] = {}
    for row in read_jsonl(out / "datasets" / "mrc_test.jsonl"):
        bucket = _bucket(row["item_id"], "pred", 10)
        gold = row["answer_text"]
        if bucket < 6:
            predictions[row["item_id"]] = gold
        elif bucket < 9:
            predictions[row["item_id"]] = " ".join(gold.split()[:3])
        else:
            predictions[row["item_id"]] = "no answer found"
    return responses, predictions


# -- assembly of the fixture directory --------------------------------

CONFIG = {
    "seed": SEED,
    "output_dir": "out",
    "kg": {"triples": "kg/triples.tsv", "labels": "kg/labels.tsv", "hops": 2},
    "providers": {
        "suggest": {"kind": "replay", "path": "providers/suggest.json"},
        "article_search": {"kind": "replay", "path": "providers/search.json"},
        "article_fetch": {"kind": "replay", "path": "articles.json"},
        "wiki_search": {"kind": "replay", "path": "providers/wiki_search.json"},
        "qa_tag": {"kind": "replay", "path": "providers/qa_tag.json"},
        "paraphrase": {"kind": "replay", "path": "providers/paraphrase.json"},
    },
    "questions": {"seeds": "seeds.txt", "max_completions": 12},
    "templates": {"language": "en", "limit_per_template": 2, "similarity_threshold": 0.6},
    "passages": {"window": 60, "step": 30},
    "tagging": {"language": "en", "min_ratio": 0.8},
    "linking": {"similarity_threshold": 0.85},
    "verification": {
        "annotators": ["anna", "piotr"],
        "super_annotator": "super",
        "overlap_fraction": 0.1,
        "stage1_sources": ["decisions/stage1.jsonl"],
        "stage2_sources": ["decisions/stage2.jsonl"],
        "template_decisions": "decisions/templates.jsonl",
    },
    "split": {"test_fraction": 0.2},
    "eval": {
        "k_values": [1, 5, 10],
        "triples_k": 20,
        "hops": 2,
        "use_kg": True,
        "responses": "eval/responses.json",
        "predictions": "eval/predictions.json",
    },
}


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def main() -> int:
    if WORLD.exists():
        shutil.rmtree(WORLD)
    WORLD.mkdir(parents=True)

    graph = build_graph()
    (WORLD / "kg").mkdir()
    save_graph(graph, WORLD / "kg" / "triples.tsv", WORLD / "kg" / "labels.tsv")

    articles = build_articles(graph)
    _write_json(WORLD / "articles.json", articles)
    print(f"graph: {len(graph.entities)} entities, {len(graph.triples)} triples; {len(articles)} articles")

    _write_json(WORLD / "providers" / "paraphrase.json", build_paraphrase_map(graph, CONFIG["templates"]))
    _write_json(WORLD / "providers" / "wiki_search.json", build_wiki_search_map(graph))
    (WORLD / "config.yaml").write_text(yaml.safe_dump(CONFIG, sort_keys=False), encoding="utf-8")

    # placeholder inputs so every configured path exists on the first pass
    (WORLD / "seeds.txt").write_text("", encoding="utf-8")
    _write_json(WORLD / "providers" / "suggest.json", {})
    _write_json(WORLD / "providers" / "search.json", {})
    _write_json(WORLD / "providers" / "qa_tag.json", {})
    _write_jsonl(WORLD / "decisions" / "stage1.jsonl", [])
    _write_jsonl(WORLD / "decisions" / "stage2.jsonl", [])
    _write_jsonl(WORLD / "decisions" / "templates.jsonl", [])
    _write_json(WORLD / "eval" / "responses.json", {})
    _write_json(WORLD / "eval" / "predictions.json", {})

    scratch = Path(tempfile.mkdtemp(prefix="worldbuild-"))
    config = pipeline.load_config(WORLD / "config.yaml")
    config.output_dir = scratch

    def run(stage: str) -> None:
        report = pipeline.run_stage(config, stage, force=True)
        print(" ", report.line())

    # lane 1: templates (paraphrase map already in place)
    run("kg-import")
    run("templates")
    _write_jsonl(WORLD / "decisions" / "templates.jsonl", build_template_decisions(scratch))

    # lane 2: natural questions, with one template question smuggled in so the
    # two lanes collide on a duplicate at assembly time
    questions = natural_questions(graph)
    seeds = list(SEED_QUESTIONS)
    twin = pick_twin_question(scratch)
    if twin:
        questions.append(twin)
        seeds.append(twin)
        print(f"  twin question: {twin!r}")
    (WORLD / "seeds.txt").write_text("\n".join(seeds) + "\n", encoding="utf-8")
    _write_json(WORLD / "providers" / "suggest.json", build_suggest_map(questions, seeds))
    _write_json(WORLD / "providers" / "search.json", build_search_map(articles, questions))

    run("questions")
    run("passages")
    _write_json(WORLD / "providers" / "qa_tag.json", build_qa_tag_map(scratch))
    run("tag")
    run("link")

    force_correct = {question_id(twin)} if twin else set()
    stage1, stage2 = build_stage_decisions(scratch, force_correct)
    _write_jsonl(WORLD / "decisions" / "stage1.jsonl", stage1)
    _write_jsonl(WORLD / "decisions" / "stage2.jsonl", stage2)

    run("verify-export")
    run("verify-import")
    run("assemble")
    run("kg-sample")

    responses, predictions = build_eval_files(scratch, graph)
    _write_json(WORLD / "eval" / "responses.json", responses)
    _write_json(WORLD / "eval" / "predictions.json", predictions)
    run("eval-kbqa")
    run("eval-mrc")
    run("eval-ir")

    summary = json.loads((scratch / "datasets" / "summary.json").read_text(encoding="utf-8"))
    print("datasets:", json.dumps(summary, sort_keys=True))
    shutil.rmtree(scratch)
    print(f"world written to {WORLD}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
