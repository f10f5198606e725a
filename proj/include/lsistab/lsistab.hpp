#pragma once

#include "lsistab/bounds.hpp"
#include "lsistab/corpus.hpp"
#include "lsistab/counterex.hpp"
#include "lsistab/decompose.hpp"
#include "lsistab/error.hpp"
#include "lsistab/estimate.hpp"
#include "lsistab/follmer.hpp"
#include "lsistab/functionals.hpp"
#include "lsistab/gaussmix.hpp"
#include "lsistab/io.hpp"
#include "lsistab/transport.hpp"
