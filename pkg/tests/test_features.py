import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vulntag.corpus import EntityLabel, IOBTag, build_description, tokenize
from vulntag.errors import InvalidParameterError
from vulntag.features import (
    BOUNDARY_END,
    BOUNDARY_START,
    DescriptionContext,
    FeatureConfig,
    HeuristicPosTagger,
    TrainGazetteers,
    collect_train_gazetteers,
    domain_features,
    get_pos_provider,
    iob_features,
    pos_tag,
    word_shape,
)


def flags_of(text):
    shape = word_shape(text)
    return {
        name
        for name in (
            "begins_digit",
            "interior_digit",
            "begins_capital",
            "camel_case",
            "snake_case",
            "contains_punct",
        )
        if getattr(shape, name)
    }


class TestWordShape:
    def test_version_like(self):
        assert flags_of("2.5") == {"begins_digit", "contains_punct"}

    def test_camel_case(self):
        assert flags_of("camelCaseExample") == {"camel_case"}

    def test_plain_word(self):
        assert flags_of("the") == set()

    def test_interior_digit(self):
        assert flags_of("x86") == {"interior_digit"}

    def test_snake_case(self):
        assert flags_of("snake_case") == {"snake_case", "contains_punct"}

    def test_capitalized(self):
        assert flags_of("Apple") == {"begins_capital"}

    def test_separator_breaks_camel(self):
        assert "camel_case" not in flags_of("e-Commerce")

    def test_empty_rejected(self):
        with pytest.raises(InvalidParameterError):
            word_shape("")


class TestPosTagger:
    def test_punctuation(self):
        assert pos_tag(tokenize(",")) == ["PUNCT"]

    def test_number(self):
        assert pos_tag(tokenize("2.3.0")) == ["NUM"]

    def test_gerund(self):
        assert pos_tag(tokenize("running")) == ["VBG"]

    def test_proper_requires_non_initial_position(self):
        tags = pos_tag(tokenize("Apple buys Apple"))
        assert tags[0] != "PROP" and tags[2] == "PROP"

    def test_closed_classes(self):
        assert pos_tag(tokenize("the")) == ["DET"]
        assert pos_tag(tokenize("before")) == ["PREP"]

    def test_unknown_provider(self):
        with pytest.raises(InvalidParameterError):
            get_pos_provider("statistical")

    @given(st.text(alphabet=st.characters(blacklist_categories=("Zs", "Cc")), min_size=1, max_size=12))
    @settings(max_examples=150)
    def test_total_and_closed(self, text):
        tagset = set(HeuristicPosTagger.tagset)
        tags = pos_tag(tokenize(text))
        assert all(tag in tagset for tag in tags)


def make_context(text):
    tokens = tokenize(text)
    return DescriptionContext.build(tokens)


class TestIobFeatures:
    def test_start_boundary_symbols(self):
        ctx = make_context("Safari crashed")
        feats = iob_features(ctx, 0, (BOUNDARY_START, BOUNDARY_START))
        assert f"w-1={BOUNDARY_START}" in feats
        assert f"w-2={BOUNDARY_START}" in feats
        assert f"iob-1={BOUNDARY_START}" in feats
        assert f"pos-2={BOUNDARY_START}" in feats

    def test_end_boundary_symbols(self):
        ctx = make_context("Safari crashed")
        feats = iob_features(ctx, 1, (BOUNDARY_START, "B"))
        assert f"w+1={BOUNDARY_END}" in feats
        assert f"w+2={BOUNDARY_END}" in feats

    def test_history_bigram(self):
        ctx = make_context("Internet Explorer")
        feats = iob_features(ctx, 1, (BOUNDARY_START, "B"))
        assert "bi:iob-1,w0=B|explorer" in feats
        assert "iob-1=B" in feats
        assert "iob-2=<S>" in feats

    def test_words_are_lowercased(self):
        ctx = make_context("Safari")
        feats = iob_features(ctx, 0, (BOUNDARY_START, BOUNDARY_START))
        assert "w0=safari" in feats

    def test_no_shape_features_when_all_flags_false(self):
        ctx = make_context("the cat sat on a mat big")
        feats = iob_features(ctx, 3, ("O", "O"))
        assert not any(f.startswith("shape") for f in feats)

    def test_bounded_by_44(self):
        ctx = make_context("x86 2.5 foo_Bar.x b3B_ x_9Y z9_Z.q w8_W")
        for i in range(ctx.n):
            feats = iob_features(ctx, i, ("B", "I"))
            assert len(feats) <= 44

    def test_exact_template_count_without_shapes(self):
        # 5 word + 4 pos + 2 history + 3 bigrams = 14 when no flag fires.
        ctx = make_context("the cat sat on a mat big")
        feats = iob_features(ctx, 3, ("O", "B"))
        assert len(feats) == 14


class TestDomainFeatures:
    def test_iob_window_covers_two_each_side(self):
        ctx = make_context("a b c")
        kinds = ["O", "B", "I"]
        feats = domain_features(ctx, 2, kinds, ("NONE", "NONE"))
        assert "iob-2=O" in feats
        assert "iob-1=B" in feats
        assert "iob0=I" in feats
        assert f"iob+1={BOUNDARY_END}" in feats
        assert f"iob+2={BOUNDARY_END}" in feats

    def test_gazetteer_feature_fires(self):
        ctx = make_context("Apple Safari")
        gaz = TrainGazetteers(frozenset({"apple"}), frozenset({"safari"}))
        feats = domain_features(ctx, 0, ["B", "B"], ("NONE", "NONE"), gaz)
        assert "gaz:vendor" in feats and "gaz:product" not in feats
        feats = domain_features(ctx, 1, ["B", "B"], ("NONE", "NONE"), gaz)
        assert "gaz:product" in feats and "gaz:vendor" not in feats

    def test_empty_gazetteers_fire_nothing(self):
        ctx = make_context("Apple Safari")
        feats = domain_features(ctx, 0, ["B", "B"], ("NONE", "NONE"))
        assert not any(f.startswith("gaz:") for f in feats)

    def test_domain_history(self):
        ctx = make_context("a b")
        feats = domain_features(ctx, 1, ["B", "I"], ("<S>", "software-vendor"))
        assert "dom-1=software-vendor" in feats
        assert "bi:dom-1,w0=software-vendor|b" in feats
        assert "bi:dom-2,dom-1=<S>|software-vendor" in feats

    def test_bounded_by_52(self):
        ctx = make_context("x86 2.5 foo_Bar.x b3B_ x_9Y z9_Z.q w8_W")
        gaz = TrainGazetteers(frozenset({"x86"}), frozenset({"2.5"}))
        for i in range(ctx.n):
            feats = domain_features(ctx, i, ["B"] * ctx.n, ("NONE", "NONE"), gaz)
            assert len(feats) <= 52


class TestConfigToggles:
    def test_disabling_groups_removes_templates(self):
        ctx = make_context("Safari 2.5")
        config = FeatureConfig(word_unigrams=False, shapes=False)
        feats = iob_features(ctx, 0, ("O", "O"), config)
        assert not any(f.startswith("w") for f in feats)
        assert not any(f.startswith("shape") for f in feats)
        assert any(f.startswith("pos") for f in feats)

    def test_roundtrip_through_dict(self):
        config = FeatureConfig(bigrams=False, file_extensions=("dll",))
        assert FeatureConfig.from_dict(config.to_dict()) == config

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidParameterError):
            FeatureConfig.from_dict({"word_ngrams": True})


class TestPurityAndInjectivity:
    def test_same_context_same_features(self):
        ctx = make_context("Apple Safari 2.5")
        a = iob_features(ctx, 1, ("O", "B"))
        b = iob_features(ctx, 1, ("O", "B"))
        assert a == b

    def test_distinct_arguments_distinct_ids(self):
        ctx = make_context("alpha beta")
        at0 = iob_features(ctx, 0, ("O", "O"))
        at1 = iob_features(ctx, 1, ("O", "O"))
        # Same templates, different words: the w0 ids must differ.
        assert "w0=alpha" in at0 and "w0=beta" in at1

    def test_history_does_not_leak_current_gold(self):
        # Features at position i may mention prior tags only; flipping the
        # tag AT i must not change the extracted set.
        ctx = make_context("a b c")
        f_b = domain_features(ctx, 1, ["O", "B", "O"], ("NONE", "NONE"))
        f_i = domain_features(ctx, 1, ["O", "I", "O"], ("NONE", "NONE"))
        # iob0 is part of the declared window, so remove it before comparing
        # the history-only remainder.
        assert {f for f in f_b if not f.startswith("iob0")} == {
            f for f in f_i if not f.startswith("iob0")
        }


class TestTrainGazetteerCollection:
    def test_collects_only_vendor_and_product(self):
        rows = [
            ("Apple", IOBTag("B", EntityLabel.SOFTWARE_VENDOR), "", "record-match"),
            ("Safari", IOBTag("B", EntityLabel.SOFTWARE_PRODUCT), "", "record-match"),
            ("2.5", IOBTag("B", EntityLabel.SOFTWARE_VERSION), "", "heuristic"),
            ("fast", IOBTag("O"), "", "none"),
        ]
        desc = build_description("d1", "other", rows)
        gaz = collect_train_gazetteers([desc])
        assert gaz.vendor_terms == frozenset({"apple"})
        assert gaz.product_terms == frozenset({"safari"})
