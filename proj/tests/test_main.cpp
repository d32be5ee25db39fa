#include <cstdio>

void run_tensor_graph_tests();
void run_kernel_tests();
void run_softmax_entropy_tests();
void run_costs_serialize_tests();
void run_prune_tests();
void run_quant_tests();
void run_cascade_tests();
void run_train_tests();
void run_metrics_tests();
void run_dataset_tests();
void run_experiment_tests();

int main() {
  run_tensor_graph_tests();
  run_kernel_tests();
  run_softmax_entropy_tests();
  run_costs_serialize_tests();
  run_prune_tests();
  run_quant_tests();
  run_cascade_tests();
  run_train_tests();
  run_metrics_tests();
  run_dataset_tests();
  run_experiment_tests();
  printf("all unit tests passed\n");
  return 0;
}
