#pragma once

#include "nubox/analysis.hpp"
#include "nubox/batch.hpp"
#include "nubox/bounds.hpp"
#include "nubox/certify.hpp"
#include "nubox/conv.hpp"
#include "nubox/demo.hpp"
#include "nubox/error.hpp"
#include "nubox/gradcheck.hpp"
#include "nubox/gradient.hpp"
#include "nubox/io.hpp"
#include "nubox/matrix.hpp"
#include "nubox/network.hpp"
#include "nubox/oracle.hpp"
#include "nubox/propagation.hpp"
#include "nubox/relaxation.hpp"
#include "nubox/report.hpp"
#include "nubox/trainer.hpp"
