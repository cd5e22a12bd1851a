#include "stdgn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stdgn {

namespace {

void require_same_shape(const ClassMap& a, const ClassMap& b, const char* who) {
    if (a.height != b.height || a.width != b.width) {
        throw std::invalid_argument(std::string(who) + ": mask shapes differ");
    }
}

struct Point {
    int row;
    int col;
};

std::vector<Point> boundary_points(const ClassMap& mask) {
    const ClassMap b = boundary(mask);
    std::vector<Point> pts;
    for (int r = 0; r < b.height; ++r)
        for (int c = 0; c < b.width; ++c)
            if (b(r, c)) pts.push_back({r, c});
    return pts;
}

double directed_hausdorff(const std::vector<Point>& from, const std::vector<Point>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to) {
            const double dr = p.row - q.row, dc = p.col - q.col;
            best = std::min(best, dr * dr + dc * dc);
            if (best <= worst) break;  // cannot raise the running maximum
        }
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

Structure parse_structure(const std::string& s) {
    for (Structure st : kStructures)
        if (structure_name(st) == s) return st;
    throw std::invalid_argument("unknown structure '" + s + "'");
}

std::string key_value(const EvalRecord& r, GroupKey k) {
    switch (k) {
        case GroupKey::Method: return r.method;
        case GroupKey::Vendor: return r.vendor_id;
        case GroupKey::Center: return r.center_id;
        case GroupKey::Phase: return std::string(phase_name(r.phase));
        case GroupKey::Structure: return std::string(structure_name(r.structure));
    }
    return "";
}

std::pair<double, double> mean_and_sample_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

torch::Tensor stack_slices(const std::vector<const ImageSlice*>& slices, int expected_size) {
    const long B = static_cast<long>(slices.size());
    auto images = torch::empty({B, 1, expected_size, expected_size}, torch::kFloat);
    for (long i = 0; i < B; ++i) {
        const auto& px = slices[i]->pixels;
        if (px.height != expected_size || px.width != expected_size) {
            throw std::invalid_argument("segment_volume: slice " + slices[i]->subject_id + " is " +
                                        std::to_string(px.height) + "x" + std::to_string(px.width) +
                                        ", model expects " + std::to_string(expected_size));
        }
        std::memcpy(images[i].data_ptr<float>(), px.data.data(), px.data.size() * sizeof(float));
    }
    return images;
}

}  // namespace

double dice(const ClassMap& pred_mask, const ClassMap& gold_mask) {
    require_same_shape(pred_mask, gold_mask, "dice");
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t i = 0; i < pred_mask.size(); ++i) {
        const bool p = pred_mask.data[i] != 0, g = gold_mask.data[i] != 0;
        a += p;
        b += g;
        both += p && g;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

ClassMap boundary(const ClassMap& mask) {
    ClassMap out(mask.height, mask.width, 0);
    auto inside = [&](int r, int c) { return r >= 0 && c >= 0 && r < mask.height && c < mask.width && mask(r, c) != 0; };
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            if (!inside(r, c)) continue;
            if (!inside(r - 1, c) || !inside(r + 1, c) || !inside(r, c - 1) || !inside(r, c + 1)) out(r, c) = 1;
        }
    }
    return out;
}

std::optional<double> hausdorff(const ClassMap& pred_mask, const ClassMap& gold_mask, double spacing) {
    require_same_shape(pred_mask, gold_mask, "hausdorff");
    const auto a = boundary_points(pred_mask);
    const auto b = boundary_points(gold_mask);
    if (a.empty() || b.empty()) return std::nullopt;
    return spacing * std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

ClassMap binary_mask(const ClassMap& classes, Structure structure) {
    ClassMap out(classes.height, classes.width, 0);
    const auto target = static_cast<std::uint8_t>(structure);
    for (std::size_t i = 0; i < classes.size(); ++i) out.data[i] = classes.data[i] == target;
    return out;
}

GeneratorSegmenter::GeneratorSegmenter(Generator generator, int image_size, std::string method)
    : generator_(std::move(generator)), image_size_(image_size), method_(std::move(method)) {}

torch::Tensor GeneratorSegmenter::logits(const torch::Tensor& images) {
    torch::NoGradGuard no_grad;
    generator_->eval();
    const auto zero_diff = torch::zeros({images.size(0), generator_->config.modality_dim}, images.options());
    return generator_->forward(broadcast_concat(images, zero_diff)).segmentation_logits;
}

UNetSegmenter::UNetSegmenter(BaselineUNet net, int image_size, std::string method)
    : net_(std::move(net)), image_size_(image_size), method_(std::move(method)) {}

torch::Tensor UNetSegmenter::logits(const torch::Tensor& images) {
    torch::NoGradGuard no_grad;
    net_->eval();
    return net_->forward(images);
}

std::vector<ClassMap> segment_volume(Segmenter& model, const std::vector<const ImageSlice*>& slices) {
    if (slices.empty()) return {};
    const int size = model.image_size();
    const auto predicted = model.logits(stack_slices(slices, size)).argmax(1).to(torch::kUInt8).contiguous();
    std::vector<ClassMap> out;
    out.reserve(slices.size());
    for (std::size_t i = 0; i < slices.size(); ++i) {
        ClassMap m(size, size);
        std::memcpy(m.data.data(), predicted[static_cast<long>(i)].data_ptr<std::uint8_t>(), m.size());
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<EvalRecord> evaluate_dataset(Segmenter& model, const DomainDataset& dataset,
                                         const std::vector<std::size_t>& record_indices, double spacing) {
    // Group slices into (subject, phase) stacks, keeping first-seen order.
    std::vector<std::pair<std::string, CardiacPhase>> order;
    std::map<std::pair<std::string, CardiacPhase>, std::vector<std::size_t>> stacks;
    for (std::size_t idx : record_indices) {
        const auto& r = dataset.records.at(idx);
        if (!r.label.is_labeled) continue;
        const auto key = std::make_pair(r.image.subject_id, r.image.phase);
        auto [it, inserted] = stacks.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(idx);
    }

    std::vector<EvalRecord> out;
    for (const auto& key : order) {
        auto& idxs = stacks[key];
        std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
            return dataset.records[a].image.slice_index < dataset.records[b].image.slice_index;
        });
        std::vector<const ImageSlice*> slices;
        for (std::size_t i : idxs) slices.push_back(&dataset.records[i].image);
        const auto predictions = segment_volume(model, slices);

        const auto& first = dataset.records[idxs.front()];
        for (Structure s : kStructures) {
            std::size_t a = 0, b = 0, both = 0;
            std::optional<double> hd;
            for (std::size_t k = 0; k < idxs.size(); ++k) {
                const ClassMap pred = binary_mask(predictions[k], s);
                const ClassMap gold = binary_mask(dataset.records[idxs[k]].label.classes, s);
                for (std::size_t i = 0; i < pred.size(); ++i) {
                    a += pred.data[i];
                    b += gold.data[i];
                    both += pred.data[i] & gold.data[i];
                }
                if (const auto h = hausdorff(pred, gold, spacing)) hd = std::max(hd.value_or(0.0), *h);
            }
            EvalRecord rec;
            rec.method = model.method();
            rec.subject_id = key.first;
            rec.vendor_id = first.vendor_id;
            rec.center_id = first.center_id;
            rec.phase = key.second;
            rec.structure = s;
            rec.dice = (a + b == 0) ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
            rec.hd = hd;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

std::array<double, 3> mean_dice_by_structure(const std::vector<EvalRecord>& records) {
    std::array<double, 3> sum{}, n{};
    for (const auto& r : records) {
        const int k = static_cast<int>(r.structure) - 1;
        sum[k] += r.dice;
        n[k] += 1;
    }
    for (int k = 0; k < 3; ++k) sum[k] = n[k] > 0 ? sum[k] / n[k] : 0.0;
    return sum;
}

std::string_view group_key_name(GroupKey key) {
    switch (key) {
        case GroupKey::Method: return "method";
        case GroupKey::Vendor: return "vendor";
        case GroupKey::Center: return "center";
        case GroupKey::Phase: return "phase";
        case GroupKey::Structure: return "structure";
    }
    return "?";
}

GroupKey parse_group_key(std::string_view name) {
    for (GroupKey k : {GroupKey::Method, GroupKey::Vendor, GroupKey::Center, GroupKey::Phase, GroupKey::Structure}) {
        if (group_key_name(k) == name) return k;
    }
    throw std::invalid_argument("unknown grouping key '" + std::string(name) + "'");
}

ReportTable report(const std::vector<EvalRecord>& records, const std::vector<GroupKey>& group_by) {
    std::map<std::vector<std::string>, std::vector<const EvalRecord*>> groups;
    for (const auto& r : records) {
        std::vector<std::string> key;
        for (GroupKey k : group_by) key.push_back(key_value(r, k));
        groups[key].push_back(&r);
    }
    ReportTable table;
    table.group_by = group_by;
    for (const auto& [key, members] : groups) {
        std::vector<double> dices, hds;
        std::size_t undefined = 0;
        for (const auto* r : members) {
            dices.push_back(r->dice);
            if (r->hd) {
                hds.push_back(*r->hd);
            } else {
                ++undefined;
            }
        }
        ReportRow row;
        row.key_values = key;
        row.count = members.size();
        std::tie(row.dice_mean, row.dice_std) = mean_and_sample_std(dices);
        std::tie(row.hd_mean, row.hd_std) = mean_and_sample_std(hds);
        row.hd_count = hds.size();
        row.hd_undefined = undefined;
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string ReportTable::to_csv() const {
    std::string out;
    for (GroupKey k : group_by) out += std::string(group_key_name(k)) + ",";
    out += "n,dice_mean,dice_std,hd_n,hd_undefined,hd_mean,hd_std\n";
    for (const auto& row : rows) {
        for (const auto& v : row.key_values) out += v + ",";
        out += std::to_string(row.count) + "," + format_double(row.dice_mean) + "," + format_double(row.dice_std) + "," +
               std::to_string(row.hd_count) + "," + std::to_string(row.hd_undefined) + "," +
               format_double(row.hd_mean) + "," + format_double(row.hd_std) + "\n";
    }
    return out;
}

std::string records_to_csv(const std::vector<EvalRecord>& records) {
    std::string out = "method,subject_id,vendor_id,center_id,phase,structure,dice,hd\n";
    for (const auto& r : records) {
        out += r.method + "," + r.subject_id + "," + r.vendor_id + "," + r.center_id + "," +
               std::string(phase_name(r.phase)) + "," + std::string(structure_name(r.structure)) + "," +
               format_double(r.dice) + "," + (r.hd ? format_double(*r.hd) : std::string()) + "\n";
    }
    return out;
}

std::vector<EvalRecord> records_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("records CSV: missing header");
    std::vector<EvalRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw std::invalid_argument("records CSV line " + std::to_string(lineno) + ": expected 8 fields");
        EvalRecord r;
        r.method = f[0];
        r.subject_id = f[1];
        r.vendor_id = f[2];
        r.center_id = f[3];
        r.phase = parse_phase(f[4]);
        r.structure = parse_structure(f[5]);
        r.dice = std::stod(f[6]);
        if (!f[7].empty()) r.hd = std::stod(f[7]);
        out.push_back(std::move(r));
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_overlay_pgm(const std::filesystem::path& path, const ImageF& image, const ClassMap& prediction) {
    if (image.height != prediction.height || image.width != prediction.width) {
        throw std::invalid_argument("overlay: image and prediction shapes differ");
    }
    const auto [lo, hi] = std::minmax_element(image.data.begin(), image.data.end());
    const float range = std::max(*hi - *lo, 1e-6f);
    std::string pixels(image.size(), '\0');
    for (std::size_t i = 0; i < image.size(); ++i) {
        pixels[i] = static_cast<char>(static_cast<int>(200.0f * (image.data[i] - *lo) / range));
    }
    for (Structure s : kStructures) {
        const ClassMap edge = boundary(binary_mask(prediction, s));
        for (std::size_t i = 0; i < edge.size(); ++i)
            if (edge.data[i]) pixels[i] = static_cast<char>(255);
    }
    std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n" + pixels;
    write_text(path, out);
}

}  // namespace stdgn
