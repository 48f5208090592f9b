#ifndef HBS_HBS_HPP
#define HBS_HBS_HPP

#include "hbs/field.hpp"
#include "hbs/io.hpp"
#include "hbs/shape.hpp"
#include "hbs/conformal.hpp"
#include "hbs/resample.hpp"
#include "hbs/harmonic.hpp"
#include "hbs/reconstruct.hpp"
#include "hbs/transform.hpp"
#include "hbs/datagen.hpp"
#include "hbs/render.hpp"

#endif  // HBS_HBS_HPP
