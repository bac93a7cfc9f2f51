import os
import yaml

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


class Config:
    """Simple configuration manager"""
    def __init__(self, config_file: str | None = None):
        self.config_file = config_file or os.environ.get(
            "DPSYNTH_CONFIG", os.path.join(PROJECT_ROOT, "config.yaml"))
        self._load_config()

    def _load_config(self):
        try:
            with open(self.config_file, 'r', encoding='utf-8') as file:
                config_data = yaml.safe_load(file)

            # Privacy
            self.default_delta = float(config_data['default_delta'])
            self.ledger_tolerance = float(config_data.get('ledger_tolerance', 1e-9))

            # Discretization
            self.default_bins = int(config_data['default_bins'])
            self.gauss_bound = float(config_data['gauss_bound'])

            # Mix Gauss
            self.mix_radius = float(config_data['mix_radius'])
            self.mix_component_std = float(config_data['mix_component_std'])

            # PrivBayes
            self.privbayes_degree = int(config_data['privbayes_degree'])
            self.privbayes_wide_degree = int(config_data['privbayes_wide_degree'])
            self.privbayes_wide_threshold = int(config_data['privbayes_wide_threshold'])
            self.privbayes_enumeration_limit = int(config_data['privbayes_enumeration_limit'])

            # MST
            self.mst_max_ipf_rounds = int(config_data['mst_max_ipf_rounds'])
            self.mst_ipf_tolerance = float(config_data['mst_ipf_tolerance'])

            # Accountant
            self.rdp_max_order = int(config_data['rdp_max_order'])
            self.calibration_min_sigma = float(config_data['calibration_min_sigma'])
            self.calibration_max_sigma = float(config_data['calibration_max_sigma'])
            self.calibration_tolerance = float(config_data['calibration_tolerance'])

            # GAN
            self.gan_noise_dim = int(config_data['gan_noise_dim'])
            self.gan_hidden = tuple(int(h) for h in config_data['gan_hidden'])
            self.gan_batch_size = int(config_data['gan_batch_size'])
            self.gan_epochs = int(config_data['gan_epochs'])
            self.gan_clip_norm = float(config_data['gan_clip_norm'])
            self.gan_weight_clip = float(config_data['gan_weight_clip'])
            self.gan_optimizer = str(config_data.get('gan_optimizer', 'adam'))
            self.gan_learning_rate = float(config_data['gan_learning_rate'])
            self.gan_adam_beta1 = float(config_data.get('gan_adam_beta1', 0.5))
            self.gan_adam_beta2 = float(config_data.get('gan_adam_beta2', 0.999))
            self.gan_critic_iterations = int(config_data.get('gan_critic_iterations', 5))
            self.pate_teachers = int(config_data['pate_teachers'])
            noise_scale = config_data.get('pate_vote_noise_scale')
            self.pate_vote_noise_scale = None if noise_scale is None else float(noise_scale)

            # Evaluation
            self.eval_gmm_components = int(config_data['eval_gmm_components'])
            self.eval_gmm_iterations = int(config_data['eval_gmm_iterations'])
            self.eval_gmm_tolerance = float(config_data['eval_gmm_tolerance'])
            self.silhouette_max_points = int(config_data['silhouette_max_points'])
            self.logistic_iterations = int(config_data['logistic_iterations'])
            self.logistic_learning_rate = float(config_data['logistic_learning_rate'])
            self.logistic_l2 = float(config_data['logistic_l2'])
            self.mi_similarity_floor = float(config_data['mi_similarity_floor'])

            # Benchmark
            self.bench_trainings = int(config_data['bench_trainings'])
            self.bench_samples = int(config_data['bench_samples'])
            self.bench_time_limit_minutes = float(config_data['bench_time_limit_minutes'])
            self.bench_test_fraction = float(config_data['bench_test_fraction'])
            self.output_directory = os.environ.get(
                'DPSYNTH_OUTPUT_DIR', config_data.get('output_directory', 'results'))

            # Logging
            self.log_directory = config_data['log_directory']
            self.console_log_level = config_data.get('console_log_level', 'INFO')
            self.file_log_level = config_data.get('file_log_level', 'DEBUG')

        except FileNotFoundError:
            raise FileNotFoundError(f"Configuration file '{self.config_file}' not found")
        except KeyError as e:
            raise KeyError(f"Missing configuration key: {e}")
        except yaml.YAMLError as e:
            raise ValueError(f"Invalid YAML configuration: {e}")


# Global configuration instance
config = Config()
