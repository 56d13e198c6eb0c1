import pytest
from hypothesis import given, settings, strategies as st

from aeroqa import namespaces as ns
from aeroqa.embeddings import cosine
from aeroqa.errors import ValidationError
from aeroqa.nl2sparql import (CandidateTriple, LinkCandidate, Mention,
                              MentionKind, QuestionType, classify_question,
                              construct_query, extract_mentions, generate_triples,
                              kgqa_answer, link, rank_triples, translate)
from aeroqa.triplestore import Graph, Term, Triple, Var, ask, parse_sparql

DC = Term.iri(ns.INST + "Directional_control")
NA = Term.iri(ns.INST + "Not_attained")
A1 = Term.iri(ns.ACC + "A1")
CAUSED_BY = Term.iri(ns.REL + "isCausedByAircraftIssue")
CAUSED_DUE = Term.iri(ns.REL + "isCausedDueToAircraftIssue")
LABEL = Term.iri(ns.LABEL)


@pytest.fixture(scope="module")
def mini_kg() -> Graph:
    return Graph([
        Triple(A1, CAUSED_BY, DC),
        Triple(DC, CAUSED_DUE, NA),
        Triple(A1, LABEL, Term.literal("A1")),
        Triple(DC, LABEL, Term.literal("Directional control")),
        Triple(NA, LABEL, Term.literal("Not attained")),
    ], prefixes=ns.DEFAULT_PREFIXES)


class TestClassify:
    @pytest.mark.parametrize("question,expected", [
        ("How many accidents occurred in 2002?", QuestionType.COUNT),
        ("What is the number of engine failures?", QuestionType.COUNT),
        ("Was the aircraft damaged?", QuestionType.BOOLEAN),
        ("Did the gear collapse?", QuestionType.BOOLEAN),
        ("Which accidents involved aircraft operated by Johnny Thornley and "
         "manufactured by Subaru?", QuestionType.LIST),
        ("What caused the accident?", QuestionType.LIST),
    ])
    def test_rules(self, question, expected):
        assert classify_question(question) is expected

    def test_count_cue_beats_boolean_starter(self):
        assert classify_question("Do you know how many accidents happened?") \
            is QuestionType.COUNT

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            classify_question("   ")

    def test_deterministic_and_total(self):
        for q in ["x", "Is", "count of", "9 lives"]:
            assert classify_question(q) is classify_question(q)


class TestMentions:
    def test_capitalized_run_compounds(self):
        mentions = extract_mentions(
            "Which accidents involved aircraft operated by Johnny Thornley?")
        entity_surfaces = [m.surface for m in mentions
                           if m.kind_hint is MentionKind.ENTITY]
        assert "Johnny Thornley" in entity_surfaces

    def test_stopwords_absent(self):
        mentions = extract_mentions("Was it raining")
        surfaces = [m.surface.lower() for m in mentions]
        assert surfaces == ["raining"]

    def test_verbs_marked_relation_like(self):
        mentions = extract_mentions("Which accidents were caused by icing?")
        kinds = {m.surface: m.kind_hint for m in mentions}
        assert kinds["caused by"] is MentionKind.RELATION
        assert kinds["icing"] is MentionKind.ENTITY

    def test_long_runs_tile_at_four_tokens(self):
        mentions = extract_mentions(
            "alpha bravo charlie delta echo foxtrot question")
        entity = [m for m in mentions if m.kind_hint is MentionKind.ENTITY]
        assert [m.surface for m in entity] == [
            "alpha bravo charlie delta", "echo foxtrot question"]

    @given(st.lists(st.sampled_from(
        ["was", "the", "engine", "Johnny", "Thornley", "caused", "by",
         "landing", "gear", "fire", "2002", "operated"]), min_size=1, max_size=12))
    @settings(max_examples=80, deadline=None)
    def test_spans_never_overlap(self, words):
        try:
            mentions = extract_mentions(" ".join(words))
        except ValidationError:
            return
        spans = sorted(m.span for m in mentions)
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            assert e1 <= s2
        for m in mentions:
            assert m.surface
            assert m.span[0] < m.span[1]

    def test_no_content_rejected(self):
        with pytest.raises(ValidationError):
            extract_mentions("was it the of")


class TestLink:
    def test_exact_label_ranks_first_with_similarity_one(self, mini_kg, provider):
        mention = Mention("Directional control", (0, 2), MentionKind.ENTITY)
        candidates = link([mention], mini_kg, provider)
        assert candidates
        assert candidates[0].kg_term == DC
        assert candidates[0].similarity == pytest.approx(1.0, abs=1e-9)

    def test_threshold_above_one_empties_candidates(self, mini_kg, provider):
        mention = Mention("Directional control", (0, 2), MentionKind.ENTITY)
        assert link([mention], mini_kg, provider, theta=1.01) == []

    def test_top_k_matches_exhaustive_scan(self, mini_kg, provider):
        mention = Mention("control", (0, 1), MentionKind.ENTITY)
        theta = 0.1
        got = link([mention], mini_kg, provider, theta=theta, top_k=3)
        labels = mini_kg.labels()
        scored = sorted(
            ((cosine(provider.embed("control"), provider.embed(label)), term.value)
             for term, label in labels.items()),
            key=lambda row: (-row[0], row[1]))
        expected = [(s, t) for s, t in scored if s >= theta][:3]
        assert [(round(c.similarity, 9), c.kg_term.value) for c in got] == \
            [(round(s, 9), t) for s, t in expected]

    def test_relation_mentions_scan_relation_names(self, mini_kg, provider):
        mention = Mention("caused", (0, 1), MentionKind.RELATION)
        candidates = link([mention], mini_kg, provider)
        assert {c.kg_term for c in candidates} == {CAUSED_BY, CAUSED_DUE}
        assert candidates[0].kg_term == CAUSED_BY  # tie broken on IRI


class TestGenerate:
    def test_worked_example_probe(self, mini_kg, provider):
        ent = LinkCandidate(Mention("Directional control", (0, 2), MentionKind.ENTITY),
                            DC, "Directional control", 1.0)
        rel = LinkCandidate(Mention("caused", (3, 4), MentionKind.RELATION),
                            CAUSED_DUE, "is caused due to aircraft issue", 1.0)
        candidates = generate_triples([ent], [rel], mini_kg)
        patterns = [c.patterns for c in candidates]
        assert ((DC, CAUSED_DUE, Var("x")),) in patterns

    def test_invalid_probes_dropped(self, mini_kg):
        ent = LinkCandidate(Mention("Not attained", (0, 2), MentionKind.ENTITY),
                            NA, "Not attained", 1.0)
        rel = LinkCandidate(Mention("caused", (3, 4), MentionKind.RELATION),
                            CAUSED_BY, "is caused by aircraft issue", 1.0)
        candidates = generate_triples([ent], [rel], mini_kg)
        # NA is never a subject or object of isCausedByAircraftIssue
        assert candidates == []

    def test_no_relations_means_abstention(self, mini_kg):
        ent = LinkCandidate(Mention("A1", (0, 1), MentionKind.ENTITY), A1, "A1", 1.0)
        assert generate_triples([ent], [], mini_kg) == []

    def test_every_candidate_passes_fresh_ask(self, mini_kg, provider):
        ents = [
            LinkCandidate(Mention("A1", (0, 1), MentionKind.ENTITY), A1, "A1", 1.0),
            LinkCandidate(Mention("Directional control", (2, 4), MentionKind.ENTITY),
                          DC, "Directional control", 1.0),
        ]
        rels = [
            LinkCandidate(Mention("caused", (5, 6), MentionKind.RELATION),
                          CAUSED_BY, "is caused by aircraft issue", 1.0),
            LinkCandidate(Mention("attained", (7, 8), MentionKind.RELATION),
                          CAUSED_DUE, "is caused due to aircraft issue", 1.0),
        ]
        candidates = generate_triples(ents, rels, mini_kg)
        assert candidates
        for cand in candidates:
            assert cand.valid
            assert ask(mini_kg, list(cand.patterns))

    def test_matches_exhaustive_probe_oracle(self, mini_kg):
        ents = [
            LinkCandidate(Mention("A1", (0, 1), MentionKind.ENTITY), A1, "A1", 1.0),
            LinkCandidate(Mention("Directional control", (2, 4), MentionKind.ENTITY),
                          DC, "Directional control", 1.0),
        ]
        rels = [
            LinkCandidate(Mention("caused", (5, 6), MentionKind.RELATION),
                          CAUSED_BY, "x", 1.0),
            LinkCandidate(Mention("due", (7, 8), MentionKind.RELATION),
                          CAUSED_DUE, "y", 1.0),
        ]
        got = {c.patterns for c in generate_triples(ents, rels, mini_kg)}
        var = Var("x")
        expected = set()
        for rel in (CAUSED_BY, CAUSED_DUE):
            for ent in (A1, DC):
                for pattern in ((ent, rel, var), (var, rel, ent)):
                    if ask(mini_kg, [pattern]):
                        expected.add((pattern,))
            for e1 in (A1, DC):
                for e2 in (A1, DC):
                    if e1 != e2 and ask(mini_kg, [(e1, rel, e2)]):
                        expected.add(((e1, rel, e2),))
        for r1 in (CAUSED_BY, CAUSED_DUE):
            for r2 in (CAUSED_BY, CAUSED_DUE):
                if r1 == r2:
                    continue
                conj = ((var, r1, A1), (var, r2, DC))
                if ask(mini_kg, list(conj)):
                    expected.add(conj)
                conj = ((var, r1, DC), (var, r2, A1))
                if ask(mini_kg, list(conj)):
                    expected.add(conj)
        assert got == expected


class TestRank:
    def _cand(self, verbalization):
        return CandidateTriple(((A1, CAUSED_BY, Var("x"))), verbalization, True)

    def test_full_overlap_scores_one_and_ranks_first(self):
        cands = [
            CandidateTriple(((A1, CAUSED_BY, Var("x")),), "engine fire", True),
            CandidateTriple(((A1, CAUSED_BY, Var("x")),), "directional control", True),
        ]
        ranked = rank_triples(cands, "the directional control")
        assert ranked[0].verbalization == "directional control"
        assert ranked[0].rank_score == pytest.approx(1.0)

    def test_zero_overlap_ranks_last(self):
        cands = [
            CandidateTriple(((A1, CAUSED_BY, Var("x")),), "unrelated thing", True),
            CandidateTriple(((A1, CAUSED_BY, Var("x")),), "engine fire", True),
        ]
        ranked = rank_triples(cands, "what engine fire happened")
        assert ranked[-1].verbalization == "unrelated thing"
        assert ranked[-1].rank_score == 0.0

    def test_is_a_permutation(self):
        cands = [
            CandidateTriple(((A1, CAUSED_BY, Var("x")),), f"verb {i}", True)
            for i in range(5)
        ]
        ranked = rank_triples(cands, "verb 3")
        assert sorted(c.verbalization for c in ranked) == \
            sorted(c.verbalization for c in cands)

    def test_ordering_matches_exhaustive_jaccard(self):
        from aeroqa.ontology import content_tokens
        question = "which accidents involved the landing gear"
        cands = [
            CandidateTriple(((A1, CAUSED_BY, Var("x")),), v, True)
            for v in ["landing gear", "landing gear collapsed",
                      "engine fire", "accidents involved landing gear"]
        ]
        q_tokens = set(content_tokens(question))

        def jaccard(v):
            v_tokens = set(content_tokens(v))
            union = q_tokens | v_tokens
            return len(q_tokens & v_tokens) / len(union) if union else 0.0

        expected = sorted((c.verbalization for c in cands),
                          key=lambda v: (-jaccard(v), len(v), v))
        ranked = rank_triples(cands, question)
        assert [c.verbalization for c in ranked] == expected


class TestConstruct:
    def test_list_template(self, mini_kg):
        cand = CandidateTriple(((Var("x"), CAUSED_BY, DC),), "v", True, 1.0)
        text = construct_query(QuestionType.LIST, [cand], ns.DEFAULT_PREFIXES)
        assert text == (
            "PREFIX inst: <http://aviation.example/inst/>\n"
            "PREFIX rel: <http://aviation.example/rel/>\n"
            "SELECT DISTINCT ?x WHERE { ?x rel:isCausedByAircraftIssue "
            "inst:Directional_control }")

    def test_count_template(self):
        cand = CandidateTriple(((Var("x"), CAUSED_BY, DC),), "v", True, 1.0)
        text = construct_query(QuestionType.COUNT, [cand], ns.DEFAULT_PREFIXES)
        assert "SELECT (COUNT(DISTINCT ?x) AS ?c) WHERE" in text

    def test_boolean_allows_ground_pattern(self):
        cand = CandidateTriple(((A1, CAUSED_BY, DC),), "v", True, 1.0)
        text = construct_query(QuestionType.BOOLEAN, [cand], ns.DEFAULT_PREFIXES)
        assert text.splitlines()[-1] == \
            "ASK WHERE { acc:A1 rel:isCausedByAircraftIssue inst:Directional_control }"

    def test_list_skips_ground_candidates(self):
        ground = CandidateTriple(((A1, CAUSED_BY, DC),), "g", True, 0.9)
        open_cand = CandidateTriple(((Var("x"), CAUSED_BY, DC),), "o", True, 0.5)
        text = construct_query(QuestionType.LIST, [ground, open_cand],
                               ns.DEFAULT_PREFIXES)
        assert "?x" in text

    def test_zero_triples_signal_abstention(self):
        assert construct_query(QuestionType.LIST, [], ns.DEFAULT_PREFIXES) is None

    def test_constructed_text_reparses(self, mini_kg):
        cand = CandidateTriple(((Var("x"), CAUSED_BY, DC), (Var("x"), CAUSED_DUE, NA)),
                               "v", True, 1.0)
        for qtype in QuestionType:
            text = construct_query(qtype, [cand], ns.DEFAULT_PREFIXES)
            query = parse_sparql(text)
            assert query.patterns == [
                (Var("x"), CAUSED_BY, DC), (Var("x"), CAUSED_DUE, NA)]


class TestKgqaAnswer:
    def test_worked_pipeline_example(self, mini_kg, provider):
        assert kgqa_answer("What caused accident A1?", mini_kg, provider) == \
            ["Directional control"]

    def test_multi_hop_answers_planted_accident(self, provider):
        jt = Term.iri(ns.INST + "Johnny_Thornley")
        subaru = Term.iri(ns.INST + "Subaru")
        other = Term.iri(ns.ACC + "A2")
        kg = Graph([
            Triple(A1, Term.iri(ns.REL + "operatedBy"), jt),
            Triple(A1, Term.iri(ns.REL + "manufacturedBy"), subaru),
            Triple(other, Term.iri(ns.REL + "operatedBy"), jt),
            Triple(A1, LABEL, Term.literal("A1")),
            Triple(other, LABEL, Term.literal("A2")),
            Triple(jt, LABEL, Term.literal("Johnny Thornley")),
            Triple(subaru, LABEL, Term.literal("Subaru")),
        ], prefixes=ns.DEFAULT_PREFIXES)
        q = ("Which accidents involved aircraft operated by Johnny Thornley "
             "and manufactured by Subaru?")
        result = translate(q, kg, provider)
        assert result is not None
        assert result.answers[0] == "A1"
        assert "operatedBy" in result.query_text
        assert "manufacturedBy" in result.query_text

    def test_unlinkable_question_abstains(self, mini_kg, provider):
        assert kgqa_answer("What about quantum flux capacitors?",
                           mini_kg, provider) == []

    def test_no_answers_are_duplicated(self, engine):
        answers = engine.kg_answers("What caused accident ERA02LA101?")
        assert len(answers) == len(set(answers))

    def test_abstention_iff_no_valid_candidate(self, mini_kg, provider):
        result = translate("Was the flight delayed by weather control towers?",
                           mini_kg, provider)
        assert result is None
