from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mundartlex.evaluation import (
    EvalError,
    TagRecord,
    edit_distance,
    exact_match_report,
    format_percent,
    load_tags,
    rank_accuracy,
    save_tags,
)
from mundartlex.lexicon import Dialect

from .oracles import edit_distance_recursive, edit_distance_recursive_memo


class TestEditDistance:
    def test_identity(self):
        for x in ("", "abc", "kitten"):
            assert edit_distance(x, x) == 0

    def test_phone_sequences(self):
        # oracle-confirmed: one substitution between the two diphthongs
        a = ["f", "aI", "n"]
        b = ["f", "eI", "n"]
        assert edit_distance_recursive(a, b) == 1
        assert edit_distance(a, b) == 1

    def test_kitten_sitting(self):
        assert edit_distance_recursive("kitten", "sitting") == 3
        assert edit_distance("kitten", "sitting") == 3

    def test_empty_cases(self):
        assert edit_distance("", "abc") == 3
        assert edit_distance("ab", "") == 2

    @settings(max_examples=300)
    @given(st.text(alphabet="abc", max_size=5), st.text(alphabet="abc", max_size=5))
    def test_matches_plain_recursion(self, a, b):
        plain = edit_distance_recursive(a, b)
        assert edit_distance(a, b) == plain
        assert edit_distance_recursive_memo(a, b) == plain

    @settings(max_examples=200)
    @given(st.text(alphabet="abcd", max_size=8), st.text(alphabet="abcd", max_size=8))
    def test_symmetry(self, a, b):
        assert edit_distance(a, b) == edit_distance(b, a)

    @settings(max_examples=200)
    @given(
        st.text(alphabet="ab", max_size=6),
        st.text(alphabet="ab", max_size=6),
        st.text(alphabet="ab", max_size=6),
    )
    def test_triangle_inequality(self, a, b, c):
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


class TestFormatPercent:
    def test_one_decimal(self):
        assert format_percent(94.6) == "94.6"
        assert format_percent(40.5) == "40.5"
        assert format_percent(35.0) == "35"
        assert format_percent(22.0) == "22"

    def test_two_decimals(self):
        assert format_percent(66.88000000000001, 2) == "66.88"
        assert format_percent(51.0, 2) == "51"
        assert format_percent(22.9, 2) == "22.9"

    def test_half_up(self):
        assert format_percent(12.25, 1) == "12.3"
        assert format_percent(0.0) == "0"


def make_tags(dialect, n_items, correct_per_rank, annotator="ann", top_k=5):
    """tags for n_items items; rank r gets correct_per_rank[r-1] ones."""
    records = []
    for i in range(n_items):
        for r in range(1, top_k + 1):
            tag = 1 if i < correct_per_rank[r - 1] else 0
            records.append(
                TagRecord(
                    headword=f"w{i:04d}",
                    dialect=dialect,
                    rank=r,
                    candidate=f"c{r}",
                    tag=tag,
                    annotator=annotator,
                    reason=None if tag else "CHANGED_LETTER",
                )
            )
    return records


class TestRankAccuracy:
    def test_visp_column(self):
        tags = make_tags(Dialect.VS, 1000, (946, 742, 614, 558, 484))
        table = rank_accuracy(tags, top_k=5)
        col = table.columns[Dialect.VS]
        assert [format_percent(p, 1) for p in col.per_rank] == [
            "94.6", "74.2", "61.4", "55.8", "48.4",
        ]
        assert format_percent(col.total, 2) == "66.88"
        assert col.n_items == 1000

    def test_basel_rank_one(self):
        tags = make_tags(Dialect.BS, 200, (81, 45, 44, 26, 33))
        col = rank_accuracy(tags, top_k=5).columns[Dialect.BS]
        assert format_percent(col.per_rank[0], 1) == "40.5"

    def test_all_zero(self):
        tags = make_tags(Dialect.ZH, 10, (0, 0, 0, 0, 0))
        col = rank_accuracy(tags, top_k=5).columns[Dialect.ZH]
        assert col.per_rank == [0.0] * 5
        assert col.total == 0.0

    def test_total_is_mean_of_ranks(self):
        tags = make_tags(Dialect.BE, 40, (20, 10, 5, 40, 0))
        col = rank_accuracy(tags, top_k=5).columns[Dialect.BE]
        assert col.total == pytest.approx(sum(col.per_rank) / 5)

    def test_incomplete_coverage_names_item(self):
        tags = make_tags(Dialect.ZH, 2, (2, 2, 2, 2, 2))[:-1]
        with pytest.raises(EvalError, match="w0001/ZH/ann"):
            rank_accuracy(tags, top_k=5)

    def test_duplicate_rank_rejected(self):
        tags = make_tags(Dialect.ZH, 1, (1, 1, 1, 1, 1))
        with pytest.raises(EvalError, match="duplicate"):
            rank_accuracy(tags + [tags[0]], top_k=5)

    def test_annotators_pooled_as_rows(self):
        a = make_tags(Dialect.ZH, 10, (10, 0, 0, 0, 0), annotator="a1")
        b = make_tags(Dialect.ZH, 10, (0, 0, 0, 0, 0), annotator="a2")
        col = rank_accuracy(a + b, top_k=5).columns[Dialect.ZH]
        assert col.n_items == 20
        assert format_percent(col.per_rank[0], 1) == "50"

    def test_empty_tags_empty_table(self):
        table = rank_accuracy([], top_k=5)
        assert table.columns == {}

    def test_text_rendering_contains_labels(self):
        tags = make_tags(Dialect.VS, 4, (2, 2, 2, 2, 2))
        text = rank_accuracy(tags, top_k=5).as_text()
        assert "Visp" in text and "Total" in text and "50" in text


class TestTagRecord:
    def test_reason_only_on_zero(self):
        with pytest.raises(EvalError):
            TagRecord("w", Dialect.ZH, 1, "c", 1, "a", reason="TWO_MINOR")

    def test_bad_tag(self):
        with pytest.raises(EvalError):
            TagRecord("w", Dialect.ZH, 1, "c", 2, "a")

    def test_bad_reason(self):
        with pytest.raises(EvalError):
            TagRecord("w", Dialect.ZH, 1, "c", 0, "a", reason="NOPE")


dialects = st.sampled_from(list(Dialect))
reasons = st.sampled_from(["ADDED_LETTER", "MISSING_LETTER", "CHANGED_LETTER", "TWO_MINOR"])


@st.composite
def tag_records(draw):
    tag = draw(st.integers(min_value=0, max_value=1))
    reason = draw(reasons) if tag == 0 and draw(st.booleans()) else None
    return TagRecord(
        headword=draw(st.text(alphabet="abcdeäöü", min_size=1, max_size=8)),
        dialect=draw(dialects),
        rank=draw(st.integers(min_value=1, max_value=5)),
        candidate=draw(st.text(alphabet="abcdeäöü ", min_size=1, max_size=10)),
        tag=tag,
        annotator=draw(st.sampled_from(["ann1", "ann2"])),
        reason=reason,
    )


class TestTagsIO:
    @settings(max_examples=30)
    @given(records=st.lists(tag_records(), max_size=20))
    def test_round_trip(self, records, tmp_path_factory):
        path = tmp_path_factory.mktemp("tags") / "tags.jsonl"
        save_tags(records, path)
        assert load_tags(path) == records

    def test_bad_tag_value_names_line(self, tmp_path):
        path = tmp_path / "tags.jsonl"
        good = '{"headword": "w", "dialect": "ZH", "rank": 1, "candidate": "c", "tag": 1, "annotator": "a"}'
        bad = good.replace('"tag": 1', '"tag": 2')
        path.write_text(good + "\n" + bad + "\n", encoding="utf-8")
        with pytest.raises(EvalError, match="line 2"):
            load_tags(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "tags.jsonl"
        path.write_text("{not json}\n", encoding="utf-8")
        with pytest.raises(EvalError, match="line 1"):
            load_tags(path)

    def test_two_minor_round_trips(self, tmp_path):
        rec = TagRecord("pensionskasse", Dialect.ZH, 2, "penssionskase", 0, "a", reason="TWO_MINOR")
        path = tmp_path / "tags.jsonl"
        save_tags([rec], path)
        assert load_tags(path) == [rec]


class TestExactMatchReport:
    @staticmethod
    def synthetic_pairs():
        """2412 pairs, 978 exact; Zurich 1294/647, Visp 825/272, rest 293/59."""
        pairs = []

        def block(dialect, n, exact):
            for i in range(n):
                ref = ["a", "b"]
                pred = ref if i < exact else ["a", "x"]
                pairs.append((dialect, pred, ref))

        block(Dialect.ZH, 1294, 647)
        block(Dialect.VS, 825, 272)
        block(Dialect.BE, 293, 59)
        return pairs

    def test_paper_shaped_counts(self):
        report = exact_match_report(self.synthetic_pairs())
        assert report.groups["all"].n_pairs == 2412
        assert report.groups["all"].n_exact == 978
        assert report.groups["ZH"].n_exact == 647
        assert report.groups["VS"].n_exact == 272

    def test_reordering_invariant(self):
        pairs = self.synthetic_pairs()
        a = exact_match_report(pairs)
        b = exact_match_report(list(reversed(pairs)))
        assert a.groups["all"].n_exact == b.groups["all"].n_exact
        assert a.groups["ZH"].n_exact == b.groups["ZH"].n_exact

    def test_zero_pairs(self):
        report = exact_match_report([])
        assert report.groups["all"].n_pairs == 0
        assert report.groups["all"].mean_distance == 0.0

    def test_all_identical(self):
        report = exact_match_report([(None, ["x"], ["x"])] * 5)
        assert report.groups["all"].n_exact == 5
        assert report.groups["all"].mean_distance == 0.0

    def test_missing_reference_rejected(self):
        with pytest.raises(EvalError):
            exact_match_report([(Dialect.ZH, ["a"], None)])

    def test_mean_distance_zero_iff_all_exact(self):
        report = exact_match_report([(None, ["a"], ["a"]), (None, ["a"], ["b"])])
        g = report.groups["all"]
        assert g.n_exact == 1 and g.mean_distance == 0.5
