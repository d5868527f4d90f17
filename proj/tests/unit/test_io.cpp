#include <filesystem>
#include <sstream>

#include <doctest.h>

#include "backdiff/checkpoint.hpp"
#include "backdiff/config.hpp"
#include "backdiff/error.hpp"
#include "backdiff/io.hpp"
#include "backdiff/sampling.hpp"
#include "backdiff/valence.hpp"
#include "oracles.hpp"

using namespace backdiff;

namespace {

// Two heavy atoms and one hydrogen; C-O single bond, O-H single bond.
constexpr const char* kMethanolish =
    "methanol fragment\n"
    "  hand written\n"
    "\n"
    "  3  2  0  0  0  0  0  0  0  0999 V2000\n"
    "    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0\n"
    "    1.4000    0.0000    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0\n"
    "    1.9000    0.9000    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0\n"
    "  1  2  1  0\n"
    "  2  3  1  0\n"
    "M  END\n"
    "$$$$\n";

constexpr const char* kSilane =
    "silicon\n"
    "\n"
    "\n"
    "  2  1  0  0  0  0  0  0  0  0999 V2000\n"
    "    0.0000    0.0000    0.0000 Si  0  0  0  0  0  0  0  0  0  0  0  0\n"
    "    1.4000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0\n"
    "  1  2  1  0\n"
    "M  END\n"
    "$$$$\n";

Checkpoint random_checkpoint(std::uint64_t seed) {
  Rng rng(seed);
  const ValenceTable vt = ValenceTable::organic();
  Checkpoint ck;
  ck.config = ExperimentConfig::desk();
  ck.config.seed = seed;
  ck.config.hidden_node = 4 + static_cast<int>(rng.below(8));
  ck.config.layers = static_cast<int>(rng.below(3));
  const auto graphs = generate_toy_dataset(10, 6, vt, seed);
  ck.setup.schedule = cosine_schedule(2 + static_cast<int>(rng.below(60)));
  ck.setup.limits = estimate_limits(graphs, graphs, 0.5);
  if (rng.below(2) == 1) ck.setup.per_size = per_size_limits(graphs, graphs, 0.5);
  ck.setup.trigger = ck.config.trigger(vt, 4);
  ck.sizes = SizeDistribution::from_graphs(graphs);
  ck.model = DenoiserModel(ck.config.model_dims(vt, 4), seed);
  return ck;
}

}  // namespace

TEST_SUITE("jsonl") {
  TEST_CASE("round trip over random graphs") {
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
      const Graph g = oracle::random_graph(static_cast<int>(rng.below(10)), 4, 4, 0.4, rng);
      const std::string line = to_jsonl_line(g, "{\"k\":" + std::to_string(k) + "}");
      const GraphRecord r = parse_jsonl_line(line, 4, 4);
      CHECK(r.graph == g);
      CHECK(r.meta_json == "{\"k\":" + std::to_string(k) + "}");
    }
  }

  TEST_CASE("stream reading and errors carry line numbers") {
    Rng rng(2);
    const Graph g = oracle::random_graph(3, 4, 4, 0.5, rng);
    std::istringstream ok(to_jsonl_line(g) + "\n\n" + to_jsonl_line(g) + "\n");
    CHECK(read_jsonl(ok, 4, 4).size() == 2);

    std::istringstream bad(to_jsonl_line(g) + "\n{\"n\": 2, \"nodes\": [0]}\n");
    try {
      read_jsonl(bad, 4, 4);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.code() == ErrorCode::BadRecord);
    }
    CHECK_THROWS_AS(parse_jsonl_line("not json", 4, 4), ParseError);
    CHECK_THROWS_AS(parse_jsonl_line(R"({"schema":"backdiff.graph.v1","n":2,"nodes":[0,7],"edges":[]})", 4, 4),
                    ParseError);
    CHECK_THROWS_AS(parse_jsonl_line(R"({"schema":"backdiff.graph.v1","n":2,"nodes":[0,1],"edges":[[1,1,1]]})", 4, 4),
                    ParseError);
  }
}

TEST_SUITE("sdf") {
  TEST_CASE("hand-written record") {
    const ValenceTable vt = ValenceTable::organic();
    const SdfResult r = parse_sdf_subset(kMethanolish, vt);
    REQUIRE(r.graphs.size() == 1);
    const Graph& g = r.graphs[0];
    CHECK(g.n() == 2);
    CHECK(g.node(0) == vt.node_index("C"));
    CHECK(g.node(1) == vt.node_index("O"));
    CHECK(g.edge(0, 1) == 1);
    CHECK(r.skipped.empty());
  }

  TEST_CASE("empty input and unsupported elements") {
    const ValenceTable vt = ValenceTable::organic();
    CHECK(parse_sdf_subset("", vt).graphs.empty());
    const SdfResult r = parse_sdf_subset(std::string(kSilane) + kMethanolish, vt);
    CHECK(r.graphs.size() == 1);
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0].record == 0);
    CHECK(r.skipped[0].line == 5);
  }

  TEST_CASE("structural damage") {
    const ValenceTable vt = ValenceTable::organic();
    std::string bad_counts = kMethanolish;
    bad_counts.replace(bad_counts.find("  3  2"), 6, " x3  2");
    try {
      parse_sdf_subset(bad_counts, vt);
      FAIL("expected MalformedCountsLine");
    } catch (const ParseError& e) {
      CHECK(e.code() == ErrorCode::MalformedCountsLine);
      CHECK(e.line() == 4);
    }
    const std::string truncated = std::string(kMethanolish).substr(0, std::string(kMethanolish).find("  1  2  1"));
    try {
      parse_sdf_subset(truncated, vt);
      FAIL("expected TruncatedBlock");
    } catch (const ParseError& e) {
      CHECK(e.code() == ErrorCode::TruncatedBlock);
    }
    SdfOptions lenient;
    lenient.strict = false;
    const SdfResult r = parse_sdf_subset(bad_counts + kMethanolish, vt, lenient);
    CHECK(r.graphs.size() == 1);
    CHECK(r.skipped.size() == 1);
  }

  TEST_CASE("fuzzed input never crashes") {
    const ValenceTable vt = ValenceTable::organic();
    Rng rng(9);
    const std::string seed_text = std::string(kMethanolish) + kSilane;
    for (int k = 0; k < 2000; ++k) {
      std::string s = seed_text;
      const int edits = 1 + static_cast<int>(rng.below(20));
      for (int e = 0; e < edits; ++e) {
        const auto at = static_cast<std::size_t>(rng.below(s.size() + 1));
        switch (rng.below(3)) {
          case 0:
            if (!s.empty() && at < s.size()) s[at] = static_cast<char>(rng.below(256));
            break;
          case 1:
            s.insert(at, 1, " 0123456789\nCONH$V-"[rng.below(19)]);
            break;
          default:
            if (at < s.size()) s.erase(at, 1 + rng.below(8));
        }
      }
      try {
        const SdfResult r = parse_sdf_subset(s, vt);
        for (const auto& g : r.graphs) CHECK_NOTHROW(g.validate());
      } catch (const ParseError&) {
      }
    }
  }
}

TEST_SUITE("toy-data") {
  TEST_CASE("valid connected molecules") {
    const ValenceTable vt = ValenceTable::organic();
    const auto gs = generate_toy_dataset(300, 9, vt, 7);
    CHECK(gs.size() == 300);
    int sizes[10] = {};
    for (const auto& g : gs) {
      CHECK(is_valid_molecule(g, vt));
      CHECK(is_connected(g));
      CHECK(g.n() >= 2);
      CHECK(g.n() <= 9);
      ++sizes[g.n()];
    }
    for (int n = 3; n <= 9; ++n) CHECK(sizes[n] > 0);
    CHECK(generate_toy_dataset(300, 9, vt, 7) == gs);
  }

  TEST_CASE("two-node molecules") {
    const ValenceTable vt = ValenceTable::organic();
    for (const auto& g : generate_toy_dataset(100, 2, vt, 3)) {
      CHECK(g.n() == 2);
      CHECK(g.edge(0, 1) != kNoEdge);
      CHECK(vt.bond_order_halves(g.edge(0, 1)) <=
            2 * std::min(vt.max_valence(g.node(0)), vt.max_valence(g.node(1))));
    }
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip is lossless") {
    for (std::uint64_t s = 1; s <= 20; ++s) {
      const Checkpoint ck = random_checkpoint(s);
      const std::string bytes = serialize_checkpoint(ck);
      const Checkpoint back = deserialize_checkpoint(bytes);
      CHECK(back.model == ck.model);
      CHECK(back.config == ck.config);
      CHECK(back.sizes == ck.sizes);
      CHECK(back.setup.schedule == ck.setup.schedule);
      CHECK(back.setup.per_size.size() == ck.setup.per_size.size());
      CHECK(back.setup.trigger.fragment == ck.setup.trigger.fragment);
      CHECK(serialize_checkpoint(back) == bytes);
      Rng rng(s);
      const Graph g = oracle::random_graph(5, 4, 4, 0.3, rng);
      const SoftGraph a = denoiser_forward(ck.model, g, 1, ck.setup.schedule.steps());
      const SoftGraph b = denoiser_forward(back.model, g, 1, ck.setup.schedule.steps());
      CHECK(a.px == b.px);
      CHECK(a.pe == b.pe);
    }
  }

  TEST_CASE("corruption is detected") {
    const std::string bytes = serialize_checkpoint(random_checkpoint(3));
    Rng rng(4);
    for (int k = 0; k < 50; ++k) {
      std::string bad = bytes;
      bad[static_cast<std::size_t>(rng.below(bad.size()))] ^= static_cast<char>(1 + rng.below(255));
      try {
        deserialize_checkpoint(bad);
        FAIL("corruption not detected");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadCheckpoint);
      }
    }
    CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() / 2)), Error);
    CHECK_THROWS_AS(deserialize_checkpoint(""), Error);
  }

  TEST_CASE("files are written atomically") {
    const auto dir = std::filesystem::temp_directory_path() / "backdiff_io_test";
    std::filesystem::create_directories(dir);
    const Checkpoint ck = random_checkpoint(5);
    save_checkpoint(dir / "model.ckpt", ck);
    CHECK(load_checkpoint(dir / "model.ckpt").model == ck.model);
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      CHECK(entry.path().filename() == "model.ckpt");
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
    std::filesystem::remove_all(dir);
  }
}

TEST_SUITE("config") {
  TEST_CASE("parsing, canonical text and fingerprints") {
    const ExperimentConfig c = parse_config("# a comment\npoison_rate = 10\nepochs=3\n\nschedule = linear\n");
    CHECK(c.poison_rate == 10.0);
    CHECK(c.epochs == 3);
    CHECK(c.schedule == ScheduleKind::Linear);
    CHECK(parse_config(c.canonical_text()) == c);
    CHECK(c.fingerprint() == hex64(fnv1a64(c.canonical_text())));
    CHECK(c.fingerprint() != ExperimentConfig::desk().fingerprint());
    CHECK(parse_config(ExperimentConfig::full().canonical_text(), ExperimentConfig::desk()) ==
          ExperimentConfig::full());
  }

  TEST_CASE("bad input names the key") {
    try {
      parse_config("learning_rat = 0.1\n");
      FAIL("expected BadConfig");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadConfig);
      CHECK(std::string(e.what()).find("learning_rat") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("epochs = many\n"), Error);
    CHECK_THROWS_AS(parse_config("mix_ratio = 0\n"), Error);
    CHECK_THROWS_AS(parse_config("just text\n"), Error);
    CHECK_THROWS_AS(parse_profile("laptop"), Error);
  }
}
