#ifndef SEGFILTER_SEGFILTER_HPP
#define SEGFILTER_SEGFILTER_HPP

// Everything except the network fetcher and the command line, which pull in
// cpp-httplib and CLI11.

#include "segfilter/dom.hpp"
#include "segfilter/error.hpp"
#include "segfilter/evaluator.hpp"
#include "segfilter/filter.hpp"
#include "segfilter/io.hpp"
#include "segfilter/profile.hpp"
#include "segfilter/report.hpp"
#include "segfilter/segmenter.hpp"
#include "segfilter/text.hpp"

#endif
