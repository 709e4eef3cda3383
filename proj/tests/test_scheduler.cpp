#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "mpt/sampling.hpp"
#include "mpt/scheduler.hpp"
#include "mpt/synthetic.hpp"

using namespace mpt;
using namespace mpt::scheduler;

namespace {

// Small synthetic setup shared by the loop tests.
struct Setup {
    synthetic::SyntheticTask task;
    MptConfig cfg;
    core::Dataset train;
    core::UnlabeledPool pool;
};

Setup make_setup(int k_shot, int pool_size, int generations, std::uint64_t seed,
                 int per_class = 120) {
    Setup s;
    s.task = synthetic::make_task({}, per_class, 30);
    s.cfg.templates = s.task.pack.templates;
    s.cfg.verbalizer = s.task.pack.verbalizer;
    s.cfg.generations = generations;
    s.cfg.training.max_sequence_length = 64;
    s.cfg.training.seed = seed;
    s.cfg.seed = seed;

    s.train = sampling::balanced_kshot(s.task.train_source, k_shot, seed).train;
    std::unordered_set<std::string> exclude;
    for (const auto& ex : s.train.examples) exclude.insert(ex.instance.id);
    std::vector<core::Instance> instances;
    for (const auto& ex : s.task.train_source.examples) instances.push_back(ex.instance);
    s.pool = sampling::sample_pool(instances, pool_size, exclude, seed);
    return s;
}

class SnapshotRecorder : public RunObserver {
  public:
    struct Entry {
        int generation;
        std::string template_id;
        std::vector<pseudolabel::ScoredPseudoExample> selected;
    };
    std::vector<Entry> snapshots;
    std::vector<std::string> warnings;

    void on_snapshot(int generation, const std::string& template_id,
                     const std::vector<pseudolabel::ScoredPseudoExample>& selected) override {
        snapshots.push_back({generation, template_id, selected});
    }
    void on_warning(const std::string& w) override { warnings.push_back(w); }
};

}  // namespace

// ---------------------------------------------------------------------------
// subset arithmetic

TEST_CASE("subset size follows max(1, round-half-even(lambda * (n - 1)))") {
    CHECK(subset_size(0.25, 6) == 1);   // round(1.25) = 1
    CHECK(subset_size(1.0, 5) == 4);    // whole ensemble minus self
    CHECK(subset_size(0.01, 6) == 1);   // floor clamp
    CHECK(subset_size(0.5, 6) == 2);    // 2.5 rounds to even 2
    CHECK(subset_size(0.5, 8) == 4);    // 3.5 rounds to even 4
    CHECK(subset_size(0.75, 5) == 3);
    CHECK_THROWS_AS(subset_size(0.25, 1), ConfigError);
}

TEST_CASE("subsets never include the excluded model and have the right size") {
    backend::MockBackend mock(3);
    const auto task = synthetic::make_pack();
    auto verbalizer = std::make_shared<prompting::Verbalizer>(task.verbalizer);
    std::vector<backend::TunedPromptModel> models;
    for (const auto& t : task.templates) {
        models.push_back(mock.untrained_prompt_model(t, verbalizer, 64));
    }
    REQUIRE(models.size() == 6);

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const auto subset = sample_subset(models, 2, 0.25, rng);
        REQUIRE(subset.size() == 1);
        CHECK(subset[0].template_id() != models[2].template_id());
    }

    Rng rng(9);
    const auto all = sample_subset(models, 0, 1.0, rng);
    REQUIRE(all.size() == 5);
    std::set<std::string> ids;
    for (const auto& m : all) ids.insert(m.template_id());
    CHECK(ids.count(models[0].template_id()) == 0);
    CHECK(ids.size() == 5);

    Rng r1(42), r2(42);
    const auto a = sample_subset(models, 1, 0.5, r1);
    const auto b = sample_subset(models, 1, 0.5, r2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].template_id() == b[i].template_id());
    }
}

// ---------------------------------------------------------------------------
// generation zero

TEST_CASE("generation zero trains one model per template") {
    auto s = make_setup(4, 120, 1, 7);
    backend::MockBackend mock(7);
    const auto models = train_generation_zero(s.cfg, s.train, mock);
    REQUIRE(models.size() == 6);
    for (const auto& m : models) {
        CHECK(m.generation == 0);
        CHECK(m.weight == 1.0);  // uniform mode
        CHECK(m.trained());
    }
}

TEST_CASE("seed-accuracy weights equal the untrained accuracy, clamped") {
    auto s = make_setup(4, 120, 1, 11);
    s.cfg.omega_mode = OmegaMode::SeedAccuracy;
    backend::MockBackend mock(11);
    const auto models = train_generation_zero(s.cfg, s.train, mock);
    auto verbalizer = std::make_shared<prompting::Verbalizer>(s.cfg.verbalizer);
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto untrained = mock.untrained_prompt_model(
            s.cfg.templates[i], verbalizer, s.cfg.training.max_sequence_length);
        const double acc = backend::prompt_accuracy(untrained, s.train, mock.vocabulary());
        CHECK(models[i].weight == std::max(0.1, acc));
    }
}

// ---------------------------------------------------------------------------
// generations and growth arithmetic

TEST_CASE("generation j training sets grow by d^j with self-exclusion") {
    auto s = make_setup(16, 600, 2, 5, 250);  // |D| = 48 balanced over 3 classes
    s.cfg.growth_factor = 5;
    backend::MockBackend mock(5);
    REQUIRE(s.train.size() == 48);

    const auto gen0 = train_generation_zero(s.cfg, s.train, mock);
    std::vector<ModelProvenance> prov1;
    const auto gen1 = run_generation(1, gen0, s.train, s.pool, s.cfg, mock, &prov1);
    REQUIRE(prov1.size() == 6);
    for (const auto& p : prov1) {
        CHECK(p.training_set_size == 240);
        for (int y = 0; y < 3; ++y) CHECK(p.training_class_counts[y] == 80);
        CHECK(p.labeler_template_ids.size() == 1);
        for (const auto& labeler : p.labeler_template_ids) {
            CHECK(labeler != p.template_id);
        }
    }

    SnapshotRecorder recorder;
    std::vector<ModelProvenance> prov2;
    const auto gen2 = run_generation(2, gen1, s.train, s.pool, s.cfg, mock, &prov2, &recorder);
    for (const auto& p : prov2) {
        CHECK(p.training_set_size == 1200);
        for (int y = 0; y < 3; ++y) CHECK(p.training_class_counts[y] == 400);
    }
    // 1152 new examples from a 600-instance pool force duplicates.
    bool any_duplicate = false;
    for (const auto& snap : recorder.snapshots) {
        for (const auto& sel : snap.selected) any_duplicate |= sel.duplicate;
    }
    CHECK(any_duplicate);
    CHECK(gen2.size() == 6);
}

TEST_CASE("identical seeds give identical generation-one training results") {
    for (int round = 0; round < 2; ++round) {
        auto s = make_setup(4, 150, 1, 21);
        backend::MockBackend mock(21);
        const auto gen0 = train_generation_zero(s.cfg, s.train, mock);
        std::vector<ModelProvenance> prov;
        const auto gen1 = run_generation(1, gen0, s.train, s.pool, s.cfg, mock, &prov);
        static std::vector<std::uint64_t> first_hashes;
        if (round == 0) {
            first_hashes.clear();
            for (const auto& m : gen1) first_hashes.push_back(backend::state_hash(m));
        } else {
            REQUIRE(first_hashes.size() == gen1.size());
            for (std::size_t i = 0; i < gen1.size(); ++i) {
                CHECK(backend::state_hash(gen1[i]) == first_hashes[i]);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// distillation

TEST_CASE("distillation rows cover the pool plus the labeled set") {
    auto s = make_setup(4, 60, 1, 3);
    backend::MockBackend mock(3);
    const auto gen0 = train_generation_zero(s.cfg, s.train, mock);
    const auto rows = build_distillation_set(gen0, s.train, s.pool, mock.vocabulary());
    CHECK(rows.size() == 60 + 12);

    // Labeled rows are one-hot.
    for (std::size_t i = 0; i < s.train.size(); ++i) {
        CHECK(rows[i].target.maxCoeff() == 1.0);
        CHECK(rows[i].target.sum() == 1.0);
        CHECK(rows[i].target[s.train.examples[i].label.index] == 1.0);
    }
    // Pool rows are simplex aggregates.
    for (std::size_t i = s.train.size(); i < rows.size(); ++i) {
        CHECK(std::abs(rows[i].target.sum() - 1.0) <= 1e-9);
        CHECK(rows[i].target.minCoeff() >= 0.0);
    }
}

TEST_CASE("distillation temperature reshapes targets but keeps them simplex") {
    auto s = make_setup(4, 40, 1, 3);
    backend::MockBackend mock(3);
    const auto gen0 = train_generation_zero(s.cfg, s.train, mock);
    const auto hot = build_distillation_set(gen0, s.train, s.pool, mock.vocabulary(), 2.0);
    for (const auto& row : hot) {
        CHECK(std::abs(row.target.sum() - 1.0) <= 1e-9);
    }
}

// ---------------------------------------------------------------------------
// end to end

TEST_CASE("full run produces k+1 generations, a classifier, and test metrics") {
    auto s = make_setup(4, 150, 2, 13);
    const auto result = run(s.cfg, s.train, s.pool, s.task.test);
    CHECK(result.generations.size() == 3);
    for (const auto& gen : result.generations) CHECK(gen.size() == 6);
    CHECK(result.provenance.size() == 3);
    CHECK(result.test_report.n == static_cast<std::int64_t>(s.task.test.size()));
    CHECK(result.test_report.accuracy > 0.0);
}

TEST_CASE("k = 0 distills directly from generation zero") {
    auto s = make_setup(4, 60, 0, 13);
    const auto result = run(s.cfg, s.train, s.pool, s.task.test);
    CHECK(result.generations.size() == 1);
    CHECK(result.provenance.size() == 1);
}

TEST_CASE("rerunning the same config and seed reproduces everything") {
    auto s1 = make_setup(4, 120, 1, 17);
    auto s2 = make_setup(4, 120, 1, 17);
    const auto r1 = run(s1.cfg, s1.train, s1.pool, s1.task.test);
    const auto r2 = run(s2.cfg, s2.train, s2.pool, s2.task.test);
    CHECK(r1.test_report.accuracy == r2.test_report.accuracy);
    CHECK(r1.test_report.macro_f1 == r2.test_report.macro_f1);
    REQUIRE(r1.provenance.size() == r2.provenance.size());
    for (std::size_t g = 0; g < r1.provenance.size(); ++g) {
        for (std::size_t i = 0; i < r1.provenance[g].size(); ++i) {
            CHECK(r1.provenance[g][i].state_hash == r2.provenance[g][i].state_hash);
            CHECK(r1.provenance[g][i].labeler_template_ids ==
                  r2.provenance[g][i].labeler_template_ids);
        }
    }
}

TEST_CASE("the growth warning fires when d^k |D| exceeds the pool") {
    auto s = make_setup(4, 60, 2, 3);  // 12 * 25 = 300 > 72
    const auto result = run(s.cfg, s.train, s.pool, s.task.test);
    REQUIRE_FALSE(result.warnings.empty());
    CHECK(result.warnings[0].find("exceeds") != std::string::npos);
}

TEST_CASE("config validation lists every problem before any work") {
    MptConfig cfg;  // no templates, empty verbalizer
    cfg.subset_fraction = 0.0;
    cfg.growth_factor = 0;
    cfg.training.epochs = 0;
    try {
        require_valid(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("lambda") != std::string::npos);
        CHECK(msg.find("templates") != std::string::npos);
        CHECK(msg.find("growth factor") != std::string::npos);
        CHECK(msg.find("epochs") != std::string::npos);
    }
}

TEST_CASE("prompt baseline returns one report per template") {
    auto s = make_setup(4, 60, 0, 29);
    const auto baselines = run_prompt_baseline(s.cfg, s.train, s.task.test);
    REQUIRE(baselines.size() == 6);
    std::set<std::string> ids;
    for (const auto& b : baselines) {
        ids.insert(b.template_id);
        CHECK(b.test_report.n == static_cast<std::int64_t>(s.task.test.size()));
    }
    CHECK(ids.size() == 6);
}
