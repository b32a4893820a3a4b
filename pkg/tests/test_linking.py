import pytest

from kbqakit.linking import (
    LinkedEntities,
    QuestionNeighborhood,
    build_neighborhood,
    link_entities,
    title_similarity,
)
from kbqakit.providers import (
    CapitalizedNer,
    FailingProvider,
    IdentityLemmatizer,
    ReplayArticleFetcher,
    ReplayArticleSearch,
    ReplayWikiSearch,
    RuleBasedPos,
)

QUESTION = "Where is the silver screen in Warsaw?"


def article_row(title, page_id, links):
    return {
        "title": title,
        "page_id": page_id,
        "words": ["body"] * 10,
        "links": [[i, i + 1, entity, link_title] for i, (entity, link_title) in enumerate(links)],
    }


def make_search():
    return ReplayArticleSearch({
        "where is the silver screen in warsaw?": [
            {"title": "Cinema", "url": "https://en.wikipedia.org/wiki/Cinema", "rank": 1},
            {"title": "Warsaw", "url": "https://en.wikipedia.org/wiki/Warsaw", "rank": 2},
        ],
    })


def make_fetch():
    return ReplayArticleFetcher({
        "Cinema": article_row("Cinema", "c1", [
            ("Q55", "Silver screen"), ("Q99", "Screen"), ("Q3", "Film"),
            ("Q4", "Actor"), ("Q5", "Reel"),
        ]),
        "Warsaw": article_row("Warsaw", "w1", [
            ("Q270", "Warsaw"), ("Q6", "Poland"), ("Q7", "Vistula"),
            ("Q8", "Mermaid"), ("Q9", "Old Town"),
        ]),
    })


def make_wiki():
    return ReplayWikiSearch({
        "warsaw": [{"title": "Warsaw", "entity_id": "Q270"}],
        "warsaw?": [{"title": "Warsaw", "entity_id": "Q270"}],
        "screen": [{"title": "Screen", "entity_id": "Q99"}],
        "silver screen": [{"title": "Silver screen", "entity_id": "Q55"}],
    })


def make_nbhd():
    return build_neighborhood(QUESTION, make_search(), make_fetch())


def run_linker(nbhd=None, sim_threshold=0.85):
    return link_entities(
        QUESTION,
        RuleBasedPos(adjectives={"silver"}),
        CapitalizedNer(),
        IdentityLemmatizer(),
        None,
        make_wiki(),
        nbhd if nbhd is not None else make_nbhd(),
        sim_threshold=sim_threshold,
    )


def test_neighborhood_two_pages_five_links_each():
    nbhd = make_nbhd()
    assert len(nbhd.entity_ids) == 10
    assert {"cinema", "warsaw"} <= set(nbhd.titles)
    assert len(nbhd.entity_ids) + len({"cinema", "warsaw"}) == 12


def test_neighborhood_zero_hits():
    nbhd = build_neighborhood("no results?", ReplayArticleSearch({}), make_fetch())
    assert not nbhd.entity_ids
    assert not nbhd.titles


def test_neighborhood_duplicates_collapse():
    fetch = ReplayArticleFetcher({
        "Cinema": article_row("Cinema", "c1", [("Q55", "Silver screen")] * 5),
        "Warsaw": article_row("Warsaw", "w1", [("Q55", "Silver screen")] * 5),
    })
    nbhd = build_neighborhood(QUESTION, make_search(), fetch)
    assert nbhd.entity_ids == frozenset({"Q55"})


def test_neighborhood_survives_fetch_failure():
    nbhd = build_neighborhood(QUESTION, make_search(), FailingProvider())
    assert not nbhd.entity_ids
    assert {"cinema", "warsaw"} <= set(nbhd.titles)


def test_title_similarity_identity():
    assert title_similarity("Warsaw", "warsaw") == 1.0


def test_title_similarity_disjoint():
    assert title_similarity("abc", "xyz") == 0.0


def test_title_similarity_prefix_pair():
    assert title_similarity("warsaw", "warsawa") == pytest.approx(6 / 7)


def test_title_similarity_symmetric():
    assert title_similarity("krakow", "cracow") == title_similarity("cracow", "krakow")


def test_exact_set_from_similar_titles():
    linked = run_linker()
    assert "Q270" in linked.exact
    assert "Q99" in linked.exact
    assert "Q55" not in linked.exact


def test_named_set_requires_neighborhood_membership():
    linked = run_linker()
    assert "Q270" in linked.named


def test_nbhd_set_membership():
    linked = run_linker()
    assert "Q270" in linked.nbhd
    assert "Q55" not in linked.nbhd


def test_comb_set_from_adjacent_pair_query():
    linked = run_linker()
    assert "Q55" in linked.comb


def test_empty_neighborhood_limits_sets():
    empty = QuestionNeighborhood(entity_ids=frozenset(), titles=frozenset())
    linked = run_linker(nbhd=empty)
    assert linked.named == frozenset()
    assert linked.nbhd == frozenset()
    assert linked.comb == frozenset()
    assert "Q270" in linked.exact


def test_raising_threshold_shrinks_exact():
    loose = run_linker(sim_threshold=0.5)
    strict = run_linker(sim_threshold=1.0)
    assert strict.exact <= loose.exact


def test_membership_sets_stay_inside_neighborhood():
    nbhd = make_nbhd()
    linked = run_linker(nbhd=nbhd)
    universe = set(nbhd.entity_ids)
    titled = {"Q270"}  # matched through the page-title fallback
    assert set(linked.named) <= universe | titled
    assert set(linked.nbhd) <= universe | titled
    assert set(linked.comb) <= universe | titled
