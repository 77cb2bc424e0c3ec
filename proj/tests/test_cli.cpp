#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "fswc/data.hpp"
#include "fswc/tensor.hpp"
#include "support.hpp"

using testsupport::read_bytes;
using testsupport::TempDir;
using testsupport::write_bytes;

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the installed binary (FSWC_BIN) with redirected streams.
CliResult run_cli(const std::string& args) {
  static TempDir scratch;
  static int counter = 0;
  const char* bin = std::getenv("FSWC_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "FSWC_BIN must point at the CLI binary");
  const fs::path out_file =
      scratch.path() / ("out" + std::to_string(counter));
  const fs::path err_file =
      scratch.path() / ("err" + std::to_string(counter));
  ++counter;
  const std::string cmd = "\"" + std::string(bin) + "\" " + args + " > \"" +
                          out_file.string() + "\" 2> \"" +
                          err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const auto slurp = [](const fs::path& p) {
    const auto bytes = read_bytes(p);
    return std::string(bytes.begin(), bytes.end());
  };
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::size_t count_files(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    n += entry.is_regular_file();
  }
  return n;
}

void write_test_ppm(const fs::path& path, int h, int w) {
  fswc::Tensor img = fswc::Tensor::zeros({h, w, 3});
  for (std::size_t i = 0; i < img.size(); ++i) {
    img.flat(i) = static_cast<double>(i % 97) / 96.0;
  }
  write_bytes(path, fswc::encode_ppm(img));
}

}  // namespace

TEST_CASE("no arguments is a usage error") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("synth --no-such-flag 3").exit_code == 2);
}

TEST_CASE("help exits cleanly") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("train --help").exit_code == 0);
}

TEST_CASE("synth writes a reproducible labelled corpus") {
  TempDir dir;
  const fs::path out = dir.path() / "corpus";
  const CliResult r =
      run_cli("synth --out " + q(out) + " --per-class 5 --seed 7");
  CHECK(r.exit_code == 0);
  CHECK(count_files(out / "lt80") == 5);
  CHECK(count_files(out / "ge80") == 5);
  CHECK(fs::exists(out / "lt80" / "synth_lt80_00000.ppm"));
  CHECK(fs::exists(out / "ge80" / "synth_ge80_00004.ppm"));

  // Same seed, second directory: byte-identical files.
  const fs::path out2 = dir.path() / "corpus2";
  CHECK(run_cli("synth --out " + q(out2) + " --per-class 5 --seed 7")
            .exit_code == 0);
  CHECK(read_bytes(out / "ge80" / "synth_ge80_00002.ppm") ==
        read_bytes(out2 / "ge80" / "synth_ge80_00002.ppm"));

  // A different seed changes the pixels.
  const fs::path out3 = dir.path() / "corpus3";
  CHECK(run_cli("synth --out " + q(out3) + " --per-class 5 --seed 8")
            .exit_code == 0);
  CHECK(read_bytes(out / "ge80" / "synth_ge80_00002.ppm") !=
        read_bytes(out3 / "ge80" / "synth_ge80_00002.ppm"));

  CHECK(run_cli("synth --out " + q(out) + " --per-class 0").exit_code == 2);
  CHECK(run_cli("synth --per-class 5").exit_code == 2);
}

TEST_CASE("augment emits deterministic variants") {
  TempDir dir;
  const fs::path input = dir.path() / "input.ppm";
  write_test_ppm(input, 12, 9);

  const fs::path out = dir.path() / "aug";
  const CliResult r =
      run_cli("augment --in " + q(input) + " --out " + q(out) + " --seed 1");
  CHECK(r.exit_code == 0);
  CHECK(count_files(out) == 9);  // default count
  CHECK(fs::exists(out / "aug_000.ppm"));
  CHECK(fs::exists(out / "aug_008.ppm"));

  // Variants keep the source geometry.
  const fswc::Tensor v = fswc::load_image((out / "aug_003.ppm").string());
  CHECK(v.shape() == std::vector<int>{12, 9, 3});

  const fs::path out2 = dir.path() / "aug2";
  CHECK(run_cli("augment --in " + q(input) + " --out " + q(out2) +
                " --seed 1")
            .exit_code == 0);
  CHECK(read_bytes(out / "aug_005.ppm") == read_bytes(out2 / "aug_005.ppm"));

  const fs::path out4 = dir.path() / "aug4";
  CHECK(run_cli("augment --in " + q(input) + " --out " + q(out4) +
                " --count 3 --seed 2")
            .exit_code == 0);
  CHECK(count_files(out4) == 3);

  CHECK(run_cli("augment --out " + q(out)).exit_code == 2);
  CHECK(run_cli("augment --in " + q(input) + " --out " + q(out) +
                " --zoom-min 2 --zoom-max 1")
            .exit_code == 2);

  const fs::path garbage = dir.path() / "garbage.ppm";
  write_bytes(garbage, {'n', 'o', 'p', 'e'});
  CHECK(run_cli("augment --in " + q(garbage) + " --out " + q(out))
            .exit_code == 1);
  CHECK(run_cli("augment --in " + q(dir.path() / "absent.ppm") + " --out " +
                q(out))
            .exit_code == 1);
}

TEST_CASE("train, eval and predict round-trip through the filesystem") {
  TempDir dir;
  const fs::path data = dir.path() / "data";
  REQUIRE(run_cli("synth --out " + q(data) + " --per-class 8 --seed 3")
              .exit_code == 0);

  const fs::path model = dir.path() / "weld.fswc";
  const fs::path csv = dir.path() / "metrics.csv";
  const std::string train_args =
      "train --data " + q(data) + " --epochs 2 --batch 4 --seed 5" +
      " --val-fraction 0.25 --model " + q(model) + " --metrics " + q(csv);
  const CliResult t = run_cli(train_args);
  CHECK(t.exit_code == 0);
  CHECK(fs::exists(model));
  CHECK(fs::exists(csv));
  // One final-epoch summary line on stdout.
  CHECK(t.out.rfind("epoch=2 ", 0) == 0);
  CHECK(t.out.find("train_loss=") != std::string::npos);
  CHECK(t.out.find(" val_acc=") != std::string::npos);
  CHECK(std::count(t.out.begin(), t.out.end(), '\n') == 1);

  // Header plus one row per epoch.
  const auto csv_bytes = read_bytes(csv);
  const std::string csv_text(csv_bytes.begin(), csv_bytes.end());
  CHECK(std::count(csv_text.begin(), csv_text.end(), '\n') == 3);
  CHECK(csv_text.rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0) ==
        0);

  // Reruns reproduce both artifacts byte for byte.
  const fs::path model2 = dir.path() / "weld2.fswc";
  const fs::path csv2 = dir.path() / "metrics2.csv";
  const CliResult t2 = run_cli(
      "train --data " + q(data) + " --epochs 2 --batch 4 --seed 5" +
      " --val-fraction 0.25 --model " + q(model2) + " --metrics " + q(csv2));
  CHECK(t2.exit_code == 0);
  CHECK(read_bytes(model2) == read_bytes(model));
  CHECK(read_bytes(csv2) == csv_bytes);

  CHECK(run_cli("train --data " + q(data) + " --model " + q(model) +
                " --metrics " + q(csv) + " --lr -1")
            .exit_code == 2);
  CHECK(run_cli("train --model " + q(model) + " --metrics " + q(csv))
            .exit_code == 2);

  // eval prints one summary line.
  const CliResult ev = run_cli("eval --data " + q(data) + " --model " +
                               q(model));
  CHECK(ev.exit_code == 0);
  CHECK(ev.out.find("loss=") == 0);
  CHECK(ev.out.find(" accuracy=") != std::string::npos);
  CHECK(ev.out.find(" tp=") != std::string::npos);
  CHECK(ev.out.find(" fp=") != std::string::npos);
  CHECK(ev.out.find(" fn=") != std::string::npos);
  CHECK(ev.out.find(" tn=") != std::string::npos);

  const fs::path broken = dir.path() / "broken.fswc";
  write_bytes(broken, {'F', 'S', 'W', 'C', 9, 9});
  CHECK(run_cli("eval --data " + q(data) + " --model " + q(broken))
            .exit_code == 1);
  CHECK(run_cli("eval --data " + q(dir.path() / "nodata") + " --model " +
                q(model))
            .exit_code == 1);

  // predict classifies one image, deterministically, resizing as needed.
  const fs::path sample = data / "ge80" / "synth_ge80_00001.ppm";
  const CliResult p1 = run_cli("predict --model " + q(model) + " --image " +
                               q(sample));
  CHECK(p1.exit_code == 0);
  const bool labelled = p1.out.rfind("class=ge80 p=0.", 0) == 0 ||
                        p1.out.rfind("class=lt80 p=0.", 0) == 0;
  CHECK(labelled);
  const CliResult p2 = run_cli("predict --model " + q(model) + " --image " +
                               q(sample));
  CHECK(p2.out == p1.out);

  const fs::path odd_size = dir.path() / "odd.ppm";
  write_test_ppm(odd_size, 17, 23);
  CHECK(run_cli("predict --model " + q(model) + " --image " + q(odd_size))
            .exit_code == 0);
  CHECK(run_cli("predict --model " + q(model) + " --image " +
                q(dir.path() / "absent.ppm"))
            .exit_code == 1);
  CHECK(run_cli("predict --image " + q(sample)).exit_code == 2);
}
