#include "mpt/synthetic.hpp"

#include "mpt/rng.hpp"

namespace mpt::synthetic {

namespace {

const char* kFamilies[] = {"alpha", "beta", "gamma"};

std::string padded(int value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

core::Instance make_instance(const TaskSpec& spec, int cls, const std::string& id,
                             std::uint64_t stream, int index) {
    Rng rng(derive_seed(spec.seed, "instance",
                        stream * 8 + static_cast<std::uint64_t>(cls),
                        static_cast<std::uint64_t>(index)));
    const int length =
        spec.min_tokens + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(spec.max_tokens - spec.min_tokens + 1)));
    const int signals =
        spec.min_signal + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(spec.max_signal - spec.min_signal + 1)));

    std::vector<std::string> tokens;
    tokens.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < signals; ++i) {
        const int pick = static_cast<int>(
            rng.below(static_cast<std::uint64_t>(spec.signal_vocab_per_class)));
        tokens.push_back(std::string(kFamilies[cls]) + padded(pick, 2));
    }
    for (int i = signals; i < length; ++i) {
        const int pick =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.shared_vocab)));
        tokens.push_back("common" + padded(pick, 2));
    }
    rng.shuffle(tokens);

    core::Instance inst;
    inst.id = id;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) inst.text += ' ';
        inst.text += tokens[i];
    }
    return inst;
}

}  // namespace

prompting::TemplatePack make_pack() {
    using namespace prompting;
    TemplatePack pack;
    pack.task = "synthetic";
    pack.space = core::LabelSpace::of({"Alpha", "Beta", "Gamma"});
    pack.verbalizer.space = pack.space;
    pack.verbalizer.words = {{"alpha", "alph"}, {"beta"}, {"gamma"}};

    const std::string description = "Each text belongs to one of three token families.";
    auto hard = [&](std::string id, bool with_description, std::string tail) {
        PromptTemplate t;
        t.id = std::move(id);
        t.kind = TemplateKind::Hard;
        if (with_description) {
            t.task_description = description;
            t.segments.push_back(DescriptionSlot{});
        }
        t.segments.push_back(InstanceSlot{"text"});
        t.segments.push_back(LiteralSegment{std::move(tail)});
        t.segments.push_back(MaskSlot{});
        return t;
    };
    auto soft = [&](std::string id, int slots) {
        PromptTemplate t;
        t.id = std::move(id);
        t.kind = TemplateKind::Soft;
        t.segments.push_back(InstanceSlot{"text"});
        t.segments.push_back(LiteralSegment{"."});
        for (int i = 0; i < slots; ++i) t.segments.push_back(SoftSlot{i});
        t.segments.push_back(MaskSlot{});
        return t;
    };
    pack.templates.push_back(hard("syn-t1", true, ". Token family:"));
    pack.templates.push_back(hard("syn-t2", true, ". The family of this text is"));
    pack.templates.push_back(hard("syn-t3", false, ". The family of this text is"));
    pack.templates.push_back(hard("syn-t4", false, ". Token family:"));
    pack.templates.push_back(soft("syn-s2", 2));
    pack.templates.push_back(soft("syn-s3", 3));
    return pack;
}

SyntheticTask make_task(const TaskSpec& spec, int train_per_class, int test_per_class) {
    SyntheticTask task;
    task.pack = make_pack();
    task.train_source.space = task.pack.space;
    task.test.space = task.pack.space;

    for (int cls = 0; cls < 3; ++cls) {
        for (int i = 0; i < train_per_class; ++i) {
            const std::string id =
                "syn-" + std::string(kFamilies[cls]).substr(0, 1) + "-" + padded(i, 4);
            task.train_source.examples.push_back(
                {make_instance(spec, cls, id, 0, i), task.pack.space.at(cls)});
        }
        for (int i = 0; i < test_per_class; ++i) {
            const std::string id =
                "syn-test-" + std::string(kFamilies[cls]).substr(0, 1) + "-" + padded(i, 4);
            task.test.examples.push_back(
                {make_instance(spec, cls, id, 1, i), task.pack.space.at(cls)});
        }
    }
    return task;
}

}  // namespace mpt::synthetic
