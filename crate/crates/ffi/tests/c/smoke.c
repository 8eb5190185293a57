#include <stdio.h>
#include <string.h>
#include "dpsynth.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        DpsStatus s_ = (call);                                               \
        if (s_ != DPS_STATUS_OK) {                                           \
            const char *m_ = dps_last_error_message();                       \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, m_ ? m_ : ""); \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(int argc, char **argv) {
    if (argc != 3) return 2;
    DpsTable *table = NULL, *train = NULL, *control = NULL, *test = NULL, *syn = NULL;
    CHECK(dps_table_load_csv(argv[1], NULL, &table));
    CHECK(dps_split(table, 0.6, 0.2, 0.2, 1, &train, &control, &test));
    double eps = 1.0;
    CHECK(dps_generate(train, "dpnpc", &eps, 20, 100, 1, &syn));
    CHECK(dps_table_write_csv(syn, argv[2]));
    char *json = NULL;
    CHECK(dps_evaluate(train, control, syn, test, "salary", 20, 0.1, 0.95, 1, &json));
    double mcc = 0.0;
    CHECK(dps_mcc(40, 40, 10, 10, &mcc));
    int ok = dps_table_rows(syn) == 100 && strstr(json, "\"avg_ks\"") != NULL && mcc == 0.6;
    if (dps_generate(train, "dpnpc", NULL, 20, 100, 1, &syn) != DPS_STATUS_CONFIG) ok = 0;
    printf("%s\n", ok ? "ok" : "mismatch");
    dps_string_free(json);
    dps_table_free(syn);
    dps_table_free(test);
    dps_table_free(control);
    dps_table_free(train);
    dps_table_free(table);
    return ok ? 0 : 1;
}
