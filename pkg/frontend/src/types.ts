// API payload shapes, mirrored from the service's response models.

export interface EventChip {
  id: string;
  name: string;
  kind: string;
}

export interface RefChip {
  id: string;
  name: string;
}

export interface TopicChip {
  id: string;
  name: string;
  color_index: number | null;
}

export interface OutputRef {
  id: string;
  kind: "insight" | "goal" | "recommendation";
  title: string;
}

export interface VoiceCard {
  id: string;
  text: string;
  event: EventChip | null;
  phase: RefChip | null;
  topics: TopicChip[];
  cited: boolean;
  cited_outputs: OutputRef[];
  uncited_rationale: string | null;
  uncited_note: string | null;
  sub_geography: RefChip | null;
  location_text: string | null;
  coordinates: { lat: number; lon: number } | null;
  audio_ref: string | null;
  collected_at: string;
  revision: number;
}

export interface VoicePage {
  items: VoiceCard[];
  total: number;
  offset: number;
  limit: number;
}

export interface TopicCount {
  topic_id: string;
  topic_name: string;
  pair_count: number;
}

export interface TopicDistribution {
  output_id: string;
  entries: TopicCount[];
  untagged_count: number;
  total_cited_voices: number;
}

export interface OutputCard {
  id: string;
  kind: "insight" | "goal" | "recommendation";
  title: string;
  description: string;
  voice_summary: string;
  cited_voice_count: number;
  topic_distribution: TopicDistribution;
  sparked_by: OutputRef[];
  next_steps: OutputRef[];
  phase_id: string;
  revision: number;
}

export interface PhaseView {
  id: string;
  name: string;
  start_date: string;
  end_date: string | null;
  status: string;
  description: string;
}

export interface PhaseEvents {
  phase_id: string;
  phase_name: string;
  events: EventChip[];
}

export interface ProjectView {
  id: string;
  name: string;
  description: string;
  goals_overview: string;
  phases: PhaseView[];
  events_by_phase: PhaseEvents[];
}

export interface FacetOptions {
  events: EventChip[];
  topics: TopicChip[];
  sub_geographies: RefChip[];
  outputs: OutputRef[];
}

export interface MapCluster {
  centroid: { lat: number; lon: number };
  member_voice_ids: string[];
  dominant_topic_id: string | null;
  zoom: number;
  cell_x: number;
  cell_y: number;
}

export interface ClusterResponse {
  zoom: number;
  total_points: number;
  clusters: MapCluster[];
}

export interface MemberPoint {
  voice_id: string;
  x: number;
  y: number;
  color_index: number | null;
}

export interface CategoryCircle {
  category_id: string;
  label: string;
  count: number;
  center_x: number;
  center_y: number;
  radius: number;
  member_points: MemberPoint[];
}

export interface LayoutResponse {
  scheme: string;
  circles: CategoryCircle[];
}

export type CommunityPage = "home" | "about" | "voices_list" | "map" | "outputs" | "feedback";

export type EventKind =
  | "page_view"
  | "voice_card_view"
  | "citation_accordion_expand"
  | "output_card_view"
  | "output_deep_dive"
  | "output_filter"
  | "goal_card_click"
  | "output_to_output_click"
  | "voice_output_click"
  | "map_point_click"
  | "translate_toggle"
  | "audio_play"
  | "search"
  | "filter_apply";

export interface VoiceQuery {
  event_id?: string[];
  topic_id?: string[];
  output_id?: string[];
  sub_geography_id?: string[];
  cited?: boolean;
  search?: string;
  sort?: "phase_chronological" | "collected_at";
  offset?: number;
  limit?: number;
}
