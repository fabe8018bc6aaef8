// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "viewfool/error.hpp"
#include "viewfool/image.hpp"
#include "viewfool/oracle.hpp"

namespace viewfool {

struct Logits {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

enum class ClassifierKind { linear_pixels, template_bank, external_command };

inline std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::linear_pixels: return "linear_pixels";
    case ClassifierKind::template_bank: return "template_bank";
    case ClassifierKind::external_command: return "external_command";
  }
  return "?";
}

/// A black-box image classifier. Only predict() and the losses built on it
/// should be called by attack code.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::linear_pixels;
  int class_count = 2;
  int input_width = 16;
  int input_height = 16;
  std::vector<double> weights;  // linear: class_count rows of 3*w*h
  std::vector<double> bias;     // linear: class_count
  std::vector<ImageBuffer> templates;  // template_bank: one per class
  double logit_scale = 1.0;            // template_bank: logits = -scale * MSE
  std::shared_ptr<ExternalOracle> oracle;

  std::size_t input_values() const {
    return 3 * static_cast<std::size_t>(input_width) * static_cast<std::size_t>(input_height);
  }
};

inline ClassifierSpec make_linear_classifier(int width, int height, std::vector<double> weights,
                                             std::vector<double> bias) {
  ClassifierSpec s;
  s.kind = ClassifierKind::linear_pixels;
  s.input_width = width;
  s.input_height = height;
  s.class_count = static_cast<int>(bias.size());
  if (s.class_count < 2) throw InvalidArgument("classifier needs at least two classes");
  if (width < 1 || height < 1) throw InvalidArgument("classifier input size must be positive");
  if (weights.size() != s.input_values() * bias.size())
    throw InvalidArgument("linear weights do not match class_count x (3*w*h)");
  s.weights = std::move(weights);
  s.bias = std::move(bias);
  return s;
}

/// Nearest-template classifier. Every template must already have the input
/// size and channels in [0, 1].
inline ClassifierSpec make_template_classifier(std::vector<ImageBuffer> templates, double logit_scale = 1.0) {
  if (templates.size() < 2) throw InvalidArgument("template bank needs at least two templates");
  if (!(logit_scale > 0.0)) throw InvalidArgument("logit_scale must be positive");
  ClassifierSpec s;
  s.kind = ClassifierKind::template_bank;
  s.input_width = templates.front().width;
  s.input_height = templates.front().height;
  s.class_count = static_cast<int>(templates.size());
  for (const auto& t : templates) {
    if (t.width != s.input_width || t.height != s.input_height)
      throw InvalidArgument("templates must share one size");
    for (double v : t.pixels)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("template channels must lie in [0,1]");
  }
  s.templates = std::move(templates);
  s.logit_scale = logit_scale;
  return s;
}

inline ClassifierSpec make_external_classifier(std::string command, int class_count, int width, int height,
                                               int timeout_ms = 10000) {
  if (class_count < 2) throw InvalidArgument("classifier needs at least two classes");
  ClassifierSpec s;
  s.kind = ClassifierKind::external_command;
  s.class_count = class_count;
  s.input_width = width;
  s.input_height = height;
  s.oracle = std::make_shared<ExternalOracle>(std::move(command), timeout_ms);
  return s;
}

/// Scales `img` to cover width x height (aspect preserved) with bilinear
/// sampling at pixel centres, then keeps the centred window. Same-size input
/// is returned unchanged.
inline ImageBuffer resize_and_crop(const ImageBuffer& img, int width, int height) {
  if (img.width == width && img.height == height) return img;
  if (img.width < 1 || img.height < 1) throw InvalidArgument("cannot resize an empty image");
  const double scale = std::max(static_cast<double>(width) / img.width, static_cast<double>(height) / img.height);
  const double off_x = (img.width * scale - width) / 2.0;
  const double off_y = (img.height * scale - height) / 2.0;
  ImageBuffer out(width, height);
  for (int r = 0; r < height; ++r) {
    const double sy = std::clamp((r + 0.5 + off_y) / scale - 0.5, 0.0, img.height - 1.0);
    const int y0 = std::min(static_cast<int>(sy), img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int c = 0; c < width; ++c) {
      const double sx = std::clamp((c + 0.5 + off_x) / scale - 0.5, 0.0, img.width - 1.0);
      const int x0 = std::min(static_cast<int>(sx), img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      const Rgb p00 = img.at(y0, x0), p01 = img.at(y0, x1), p10 = img.at(y1, x0), p11 = img.at(y1, x1);
      auto lerp2 = [&](double a, double b, double cc, double d) {
        return (a * (1 - fx) + b * fx) * (1 - fy) + (cc * (1 - fx) + d * fx) * fy;
      };
      out.set(static_cast<std::size_t>(r) * width + c,
              {lerp2(p00.r, p01.r, p10.r, p11.r), lerp2(p00.g, p01.g, p10.g, p11.g), lerp2(p00.b, p01.b, p10.b, p11.b)});
    }
  }
  return out;
}

inline Logits predict(const ClassifierSpec& spec, const ImageBuffer& image) {
  const ImageBuffer x = resize_and_crop(image, spec.input_width, spec.input_height);
  if (x.pixels.size() != spec.input_values()) throw Error("internal: preprocessed image has the wrong size");
  Logits out;
  out.values.resize(static_cast<std::size_t>(spec.class_count));
  switch (spec.kind) {
    case ClassifierKind::linear_pixels: {
      const std::size_t n = spec.input_values();
      for (std::size_t c = 0; c < out.values.size(); ++c) {
        double s = spec.bias[c];
        const double* w = spec.weights.data() + c * n;
        for (std::size_t i = 0; i < n; ++i) s += w[i] * x.pixels[i];
        out.values[c] = s;
      }
      break;
    }
    case ClassifierKind::template_bank: {
      for (std::size_t c = 0; c < out.values.size(); ++c) {
        const auto& t = spec.templates[c].pixels;
        double s = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          const double d = x.pixels[i] - t[i];
          s += d * d;
        }
        out.values[c] = -spec.logit_scale * s / static_cast<double>(t.size());
      }
      break;
    }
    case ClassifierKind::external_command: {
      if (!spec.oracle) throw Error("external classifier has no oracle attached");
      out.values = spec.oracle->query(encode_png(x));
      if (out.values.size() != static_cast<std::size_t>(spec.class_count))
        throw OracleError("oracle returned " + std::to_string(out.values.size()) + " logits, expected " +
                          std::to_string(spec.class_count));
      break;
    }
  }
  return out;
}

/// Index of the largest logit; ties go to the lowest index.
inline std::size_t argmax(const Logits& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

/// -log softmax(logits)[y] with the max shift.
inline double cross_entropy(const Logits& logits, std::size_t y) {
  if (y >= logits.size()) throw InvalidArgument("label out of range");
  const double m = logits[argmax(logits)];
  double sum = 0.0;
  for (double v : logits.values) sum += std::exp(v - m);
  return std::max(0.0, std::log(sum) - (logits[y] - m));
}

inline bool is_misclassified(const Logits& logits, std::size_t y) { return argmax(logits) != y; }

inline bool is_misclassified(const ClassifierSpec& spec, const ImageBuffer& image, std::size_t y) {
  return is_misclassified(predict(spec, image), y);
}

}  // namespace viewfool
