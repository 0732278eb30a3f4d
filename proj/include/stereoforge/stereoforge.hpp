#ifndef STEREOFORGE_STEREOFORGE_HPP
#define STEREOFORGE_STEREOFORGE_HPP

#include "error.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "tensorio.hpp"
#include "synthgen.hpp"
#include "warp.hpp"
#include "degrade.hpp"
#include "metrics.hpp"
#include "postproc.hpp"
#include "inpaint.hpp"

#endif // STEREOFORGE_STEREOFORGE_HPP
