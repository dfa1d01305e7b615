// Scores point predictions against a category-tagged benchmark and renders
// the per-cell accuracy table. A record with no prediction counts as a miss,
// so silently skipping hard cases cannot inflate the averages.

#include <cstdio>
#include <vector>

#include "forge/eval.hpp"

using namespace forge;

int main() {
  NormBox button{0.45, 0.45, 0.55, 0.55};
  std::vector<BenchRecord> bench;
  std::vector<Prediction> preds;
  auto add = [&](const std::string& id, const std::string& platform, const std::string& element,
                 double px, double py) {
    bench.push_back({id, button, {{"platform", platform}, {"element", element}}});
    if (px >= 0) preds.push_back({id, {px, py}});
  };

  add("web-t0", "Web", "Text", 0.50, 0.50);
  add("web-t1", "Web", "Text", 0.47, 0.53);
  add("web-t2", "Web", "Text", 0.80, 0.80);  // miss
  add("web-i0", "Web", "Icon", 0.55, 0.45);  // inclusive edge hit
  add("web-i1", "Web", "Icon", 0.10, 0.10);  // miss
  add("mob-t0", "Mobile", "Text", 0.50, 0.46);
  add("mob-t1", "Mobile", "Text", -1, -1);  // no prediction: counts as wrong
  add("mob-i0", "Mobile", "Icon", 0.52, 0.48);

  ScoreTable table = score(bench, preds);
  RenderedTable rendered = render_table(table);
  std::printf("%s", rendered.text.c_str());

  std::printf("\nlong form:\n%s", rendered.csv.c_str());
  std::printf("\nmicro average weighs records (%zu/%zu), macro weighs cells equally\n",
              table.total_hits, table.total_records);
  return 0;
}
