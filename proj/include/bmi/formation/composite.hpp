#pragma once

#include <bmi/formation/kernel.hpp>
#include <bmi/formation/layers.hpp>

namespace bmi::formation {

/// Floor on the blurred cumulative occupancy E_k below which a layer is
/// treated as absent.
inline constexpr double kOcclusionEpsilon = 1e-8;

/// Occlusion-aware layered formation, evaluated tile by tile.
///
/// For each channel and tile, with the tile-centre kernel PSF_k of every layer:
///   E_k       = PSF_k * (alpha_0 + ... + alpha_k)
///   I~_k      = (PSF_k * I_k) / E_k,   a~_k = (PSF_k * alpha_k) / E_k
///   P         = sum_k I~_k * prod_{k' > k} (1 - a~_k')
/// where E_k < epsilon forces I~_k = a~_k = 0. Each tile is evaluated over
/// its core plus a border of the kernel radius, and tiles are blended with
/// linear ramps spanning twice that radius around every tile seam.
/// The result is noise-free and unclipped.
Image compositeOcclusion(const DepthLayerStack &stack, const PsfProvider &psfs, const RenderConfig &config,
                         double epsilon = kOcclusionEpsilon);

/// Patch-wise baseline: each patch is convolved with the kernel of its centre
/// pixel at the patch's median depth and the results are overlap-added.
/// No occlusion handling and no boundary normalisation.
Image renderPatchwise(const Image &rgb, const Image &depthMap, const PsfProvider &psfs, const RenderConfig &config);

/// Adds i.i.d. N(0, sigma^2) noise. Each sample is a pure function of
/// (seed, element index), so the output does not depend on traversal order.
Image addGaussianNoise(const Image &image, double sigma, std::uint64_t seed);

} // namespace bmi::formation
