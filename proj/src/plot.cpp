#include "skelfuse/plot.hpp"

#include <algorithm>
#include <filesystem>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace skelfuse {

namespace {

constexpr int kW = 960, kH = 600;
constexpr int kMargin = 70;

struct Series {
  std::string name;
  std::vector<double> values;
  cv::Scalar color;
};

void draw_chart(const std::string& path, const std::string& title, const std::vector<Series>& series) {
  cv::Mat img(kH, kW, CV_8UC3, cv::Scalar(255, 255, 255));
  double lo = 0.0, hi = 1e-9;
  int n = 0;
  for (const auto& s : series) {
    n = std::max(n, static_cast<int>(s.values.size()));
    for (double v : s.values) {
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
  }
  if (n < 1) n = 1;
  hi += 0.05 * (hi - lo + 1e-9);

  const cv::Rect area(kMargin, kMargin / 2, kW - 2 * kMargin, kH - kMargin - kMargin / 2);
  cv::rectangle(img, area, cv::Scalar(120, 120, 120));
  auto to_px = [&](int i, double v) {
    const double fx = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
    const double fy = (v - lo) / (hi - lo + 1e-12);
    return cv::Point(area.x + static_cast<int>(fx * area.width),
                     area.y + area.height - static_cast<int>(fy * area.height));
  };
  for (int g = 0; g <= 4; ++g) {
    const double v = lo + (hi - lo) * g / 4.0;
    const cv::Point p = to_px(0, v);
    cv::line(img, {area.x, p.y}, {area.x + area.width, p.y}, cv::Scalar(230, 230, 230));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    cv::putText(img, buf, {6, p.y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(60, 60, 60));
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    for (std::size_t i = 1; i < s.values.size(); ++i)
      cv::line(img, to_px(static_cast<int>(i - 1), s.values[i - 1]),
               to_px(static_cast<int>(i), s.values[i]), s.color, 2);
    cv::putText(img, s.name, {area.x + 10 + 160 * static_cast<int>(si), area.y + 20},
                cv::FONT_HERSHEY_SIMPLEX, 0.5, s.color, 1);
  }
  cv::putText(img, title, {kMargin, kH - 18}, cv::FONT_HERSHEY_SIMPLEX, 0.55, cv::Scalar(0, 0, 0));
  cv::putText(img, "epoch", {kW / 2 - 24, kH - 40}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
              cv::Scalar(60, 60, 60));
  if (!cv::imwrite(path, img)) throw IoError("cannot write plot '" + path + "'");
}

}  // namespace

void plot_metrics(const std::vector<EpochRow>& rows, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<Series> losses(4);
  losses[0] = {"loss_a1", {}, cv::Scalar(180, 60, 20)};
  losses[1] = {"loss_a2", {}, cv::Scalar(40, 120, 220)};
  losses[2] = {"loss_con", {}, cv::Scalar(40, 170, 60)};
  losses[3] = {"loss_total", {}, cv::Scalar(20, 20, 20)};
  std::vector<Series> accs(2);
  accs[0] = {"train_acc", {}, cv::Scalar(180, 60, 20)};
  accs[1] = {"val_acc", {}, cv::Scalar(40, 120, 220)};
  for (const auto& r : rows) {
    losses[0].values.push_back(r.loss_a1);
    losses[1].values.push_back(r.loss_a2);
    losses[2].values.push_back(r.loss_con);
    losses[3].values.push_back(r.loss_total);
    accs[0].values.push_back(r.train_acc);
    accs[1].values.push_back(r.val_acc);
  }
  draw_chart(out_dir + "/loss_curves.png", "training losses", losses);
  draw_chart(out_dir + "/accuracy_curves.png", "accuracy", accs);
}

void plot_attention_heatmap(const std::vector<LocalizeRecord>& records, const std::string& out_dir,
                            const std::string& video_id) {
  if (records.empty()) throw ContractError("attention heatmap: no localization records");
  std::string vid = video_id.empty() ? records.front().video_id : video_id;
  std::vector<const LocalizeRecord*> rows;
  for (const auto& r : records)
    if (r.video_id == vid) rows.push_back(&r);
  if (rows.empty()) throw ContractError("attention heatmap: video '" + vid + "' not in export");
  std::sort(rows.begin(), rows.end(),
            [](const LocalizeRecord* a, const LocalizeRecord* b) { return a->frame < b->frame; });

  const int frames = static_cast<int>(rows.size());
  const int slots = static_cast<int>(rows.front()->attention_all.size());
  const int cell = 28;
  const int w = kMargin + frames * cell + 20, h = kMargin / 2 + slots * cell + 60;
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
  for (int f = 0; f < frames; ++f)
    for (int s = 0; s < slots; ++s) {
      const double a = rows[static_cast<std::size_t>(f)]->attention_all[static_cast<std::size_t>(s)];
      // low attention dark blue, high attention warm
      const int r = static_cast<int>(255 * a);
      const int b = static_cast<int>(255 * (1 - a));
      cv::Rect cellr(kMargin + f * cell, kMargin / 2 + s * cell, cell - 1, cell - 1);
      cv::rectangle(img, cellr, cv::Scalar(b, 60, r), cv::FILLED);
      if (rows[static_cast<std::size_t>(f)]->slot == s)
        cv::rectangle(img, cellr, cv::Scalar(255, 255, 255), 2);
    }
  for (int s = 0; s < slots; ++s)
    cv::putText(img, std::to_string(s), {8, kMargin / 2 + s * cell + cell / 2 + 4},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 0, 0));
  cv::putText(img, "attention per slot (rows) over sampled frames (cols), video " + vid,
              {8, h - 16}, cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0));
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/attention_heatmap.png";
  if (!cv::imwrite(path, img)) throw IoError("cannot write plot '" + path + "'");
}

}  // namespace skelfuse
