/*
 * ier.h - C interface to the image edit request parser.
 *
 * Every function returns an ier_status. On failure the thread-local message
 * from ier_last_error() describes the problem. Handles are opaque and owned
 * by the caller; release them with the matching *_free function. Strings
 * returned through char** are heap-allocated and released with
 * ier_string_free().
 */
#ifndef IER_IER_H
#define IER_IER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(IER_BUILDING_LIBRARY)
#    define IER_API __declspec(dllexport)
#  else
#    define IER_API __declspec(dllimport)
#  endif
#else
#  define IER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ier_status {
  IER_OK = 0,
  IER_ERR_UNKNOWN_LABEL = 1,
  IER_ERR_PARSE = 2,
  IER_ERR_DIMENSION_MISMATCH = 3,
  IER_ERR_MALFORMED = 4,
  IER_ERR_NON_FINITE = 5,
  IER_ERR_DEGENERATE_DATA = 6,
  IER_ERR_UNKNOWN_TAG = 7,
  IER_ERR_EMPTY_CORPUS = 8,
  IER_ERR_EMPTY_INPUT = 9,
  IER_ERR_EMPTY_AFTER_FILTER = 10,
  IER_ERR_LENGTH_MISMATCH = 11,
  IER_ERR_UNDEFINED = 12,
  IER_ERR_DECODE = 13,
  IER_ERR_IO = 14,
  IER_ERR_INVALID_ARGUMENT = 15,
  IER_ERR_INCOMPATIBLE_MODEL = 16,
  IER_ERR_INTERNAL = 99
} ier_status;

typedef enum ier_format { IER_FORMAT_BRACKET = 0, IER_FORMAT_JSONL = 1 } ier_format;

typedef enum ier_encoding { IER_ENCODING_INNERMOST = 0, IER_ENCODING_NESTED = 1 } ier_encoding;

typedef enum ier_parse_category {
  IER_PARSE_UNBALANCED_BRACKET = 0,
  IER_PARSE_UNKNOWN_LABEL = 1,
  IER_PARSE_MULTIPLE_ACTIONS = 2,
  IER_PARSE_EMPTY_NODE = 3,
  IER_PARSE_MULTIPLE_ROOTS = 4,
  IER_PARSE_MALFORMED = 5
} ier_parse_category;

typedef struct ier_corpus ier_corpus;
typedef struct ier_embeddings ier_embeddings;
typedef struct ier_action_model ier_action_model;
typedef struct ier_crf_model ier_crf_model;
typedef struct ier_report ier_report;
typedef struct ier_parser ier_parser;

/* Error handling and memory */

IER_API const char* ier_last_error(void);
IER_API const char* ier_status_name(ier_status status);
IER_API void ier_string_free(char* s);
IER_API const char* ier_version(void);

/* Corpora */

typedef struct ier_parse_error_info {
  size_t line;
  size_t token; /* 0-based offending token */
  ier_parse_category category;
  const char* category_name; /* valid while the corpus lives */
  const char* message;       /* valid while the corpus lives */
} ier_parse_error_info;

typedef struct ier_filter_counts {
  size_t no_ier;
  size_t other_action;
  size_t no_action;
} ier_filter_counts;

IER_API ier_status ier_corpus_load(const char* path, ier_format format, ier_corpus** out);
/* `source` labels error messages and may be NULL. */
IER_API ier_status ier_corpus_from_text(const char* data, size_t size, ier_format format,
                                        const char* source, ier_corpus** out);
IER_API void ier_corpus_free(ier_corpus* corpus);
IER_API size_t ier_corpus_size(const ier_corpus* corpus);
IER_API size_t ier_corpus_error_count(const ier_corpus* corpus);
IER_API ier_status ier_corpus_error(const ier_corpus* corpus, size_t index,
                                    ier_parse_error_info* out);
/* Removes non-IER, action-less and OTHER-action utterances. `counts` may be NULL. */
IER_API ier_status ier_corpus_filter(const ier_corpus* corpus, ier_corpus** out,
                                     ier_filter_counts* counts);
IER_API ier_status ier_corpus_write(const ier_corpus* corpus, ier_format format, char** out);
/* One line per utterance: "token\tTAG token\tTAG ...". */
IER_API ier_status ier_corpus_encode(const ier_corpus* corpus, ier_encoding encoding,
                                     size_t max_depth, char** out);

/* Canonical rendering of one annotated line. */
IER_API ier_status ier_parse_line(const char* line, char** canonical);

typedef struct ier_synth_options {
  size_t count;
  uint64_t seed;
  int hard;            /* share verbs between confusable actions */
  double comment_rate; /* fraction of non-IER comment lines */
} ier_synth_options;

IER_API void ier_synth_options_init(ier_synth_options* opts);
IER_API ier_status ier_synth_generate(const ier_synth_options* opts, ier_corpus** out);

/* Word vectors */

IER_API ier_status ier_embeddings_load(const char* path, ier_embeddings** out);
IER_API void ier_embeddings_free(ier_embeddings* table);
IER_API size_t ier_embeddings_dim(const ier_embeddings* table);

/* Training and evaluation */

typedef struct ier_train_options {
  uint64_t seed;             /* split seed */
  double l2;                 /* L2 strength */
  size_t max_iterations;     /* L-BFGS iterations */
  int class_weights;         /* level 1: inverse-frequency class weights */
  ier_encoding encoding;     /* level 2 */
  size_t max_depth;          /* level 2, nested encoding */
  int action_features;       /* level 2: condition on the action */
  int tune;                  /* level 2: pick l2 on the dev split */
} ier_train_options;

IER_API void ier_train_options_init(ier_train_options* opts);

/* Splits 75/25 after filtering and trains on the train part. `embeddings`
 * may be NULL. `summary_json` (may be NULL) receives split sizes and
 * optimizer status. */
IER_API ier_status ier_action_train(const ier_corpus* corpus, const ier_embeddings* embeddings,
                                    const ier_train_options* opts, ier_action_model** out,
                                    char** summary_json);
/* Scores the test split produced with opts->seed. */
IER_API ier_status ier_action_evaluate(const ier_action_model* model, const ier_corpus* corpus,
                                       const ier_embeddings* embeddings,
                                       const ier_train_options* opts, ier_report** out);
IER_API ier_status ier_action_model_to_json(const ier_action_model* model, char** out);
IER_API ier_status ier_action_model_from_json(const char* json, ier_action_model** out);
IER_API ier_status ier_action_model_save(const ier_action_model* model, const char* path);
IER_API ier_status ier_action_model_load(const char* path, ier_action_model** out);
IER_API void ier_action_model_free(ier_action_model* model);

/* Splits 80/10/10 after filtering and trains on the train part. */
IER_API ier_status ier_crf_train(const ier_corpus* corpus, const ier_train_options* opts,
                                 ier_crf_model** out, char** summary_json);
/* With `action_model` the tagger sees predicted actions, otherwise gold.
 * `token_report` may be NULL. */
IER_API ier_status ier_crf_evaluate(const ier_crf_model* model, const ier_corpus* corpus,
                                    const ier_train_options* opts,
                                    const ier_action_model* action_model,
                                    const ier_embeddings* embeddings, ier_report** span_report,
                                    ier_report** token_report);
IER_API ier_status ier_crf_model_to_json(const ier_crf_model* model, char** out);
IER_API ier_status ier_crf_model_from_json(const char* json, ier_crf_model** out);
IER_API ier_status ier_crf_model_save(const ier_crf_model* model, const char* path);
IER_API ier_status ier_crf_model_load(const char* path, ier_crf_model** out);
IER_API void ier_crf_model_free(ier_crf_model* model);

/* Metric reports */

typedef enum ier_average { IER_MICRO = 0, IER_MACRO = 1, IER_WEIGHTED = 2 } ier_average;

IER_API ier_status ier_report_table(const ier_report* report, char** out);
IER_API ier_status ier_report_json(const ier_report* report, char** out);
IER_API ier_status ier_report_confusion_csv(const ier_report* report, char** out);
IER_API ier_status ier_report_f1(const ier_report* report, ier_average average, double* f1);
IER_API void ier_report_free(ier_report* report);

/* Prediction */

/* `embeddings` may be NULL when the action model was trained without them. */
IER_API ier_status ier_parser_create(const ier_action_model* actions, const ier_crf_model* entities,
                                     const ier_embeddings* embeddings, ier_parser** out);
/* Writes an edit command (or an ambiguity notice when the top action
 * probability is below tau) as one JSON object. `id` may be NULL.
 * `ambiguous` may be NULL. */
IER_API ier_status ier_parser_parse(ier_parser* parser, const char* text, double tau,
                                    const char* id, char** json, int* ambiguous);
IER_API size_t ier_parser_level2_calls(const ier_parser* parser);
IER_API void ier_parser_free(ier_parser* parser);

/* Agreement */

/* Header row of rater names, one row per item, empty cell = missing. */
IER_API ier_status ier_agreement_from_csv(const char* csv, double* alpha, size_t* items);

#ifdef __cplusplus
}
#endif

#endif /* IER_IER_H */
